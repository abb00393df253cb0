//! Flat numbering of formulation variables and constraint labels.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Load (`X`) or unload (`Y`) indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    X,
    Y,
}

impl Role {
    fn offset(self) -> usize {
        match self {
            Role::X => 0,
            Role::Y => 1,
        }
    }
}

/// Semantic identity of a model variable. Request, truck and stop numbers
/// are zero-based for requests and trucks, one-based for stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKey {
    /// `X(i,j,p)` or `Y(i,j,p)`.
    Stop { role: Role, request: usize, truck: usize, stop: usize },
    /// `Z(j)`: the truck is rented.
    Used { truck: usize },
    /// Product of the action at `stop - 1` and the action at `stop` on one truck.
    Leg { truck: usize, stop: usize, from: (Role, usize), to: (Role, usize) },
    /// Unload of `request` at `stop` with nothing following on the route.
    LastStop { request: usize, truck: usize, stop: usize },
}

impl VarKey {
    pub fn name(&self) -> String {
        fn action(r: Role, i: usize) -> String {
            match r {
                Role::X => format!("x{}", i + 1),
                Role::Y => format!("y{}", i + 1),
            }
        }
        match *self {
            VarKey::Stop { role: Role::X, request, truck, stop } => format!("x_{}_{}_{}", request + 1, truck + 1, stop),
            VarKey::Stop { role: Role::Y, request, truck, stop } => format!("y_{}_{}_{}", request + 1, truck + 1, stop),
            VarKey::Used { truck } => format!("z_{}", truck + 1),
            VarKey::Leg { truck, stop, from, to } => {
                format!("w_{}_{}_{}_{}", truck + 1, stop, action(from.0, from.1), action(to.0, to.1))
            }
            VarKey::LastStop { request, truck, stop } => format!("v_{}_{}_{}", request + 1, truck + 1, stop),
        }
    }
}

/// Bijection between [`VarKey`]s and dense ids.
///
/// The `X`/`Y`/`Z` block always comes first with a closed-form layout, so
/// MILP and CQM models of the same instance agree on those ids. Auxiliary
/// keys follow in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarIndex {
    requests: usize,
    trucks: usize,
    stops: usize,
    aux: Vec<VarKey>,
    #[serde(skip)]
    aux_ids: HashMap<VarKey, usize>,
}

impl VarIndex {
    /// Index over `X`, `Y` for `2 * requests` stops per truck, plus `Z`.
    pub fn new(requests: usize, trucks: usize) -> Self {
        Self { requests, trucks, stops: 2 * requests, aux: Vec::new(), aux_ids: HashMap::new() }
    }

    pub fn requests(&self) -> usize {
        self.requests
    }

    pub fn trucks(&self) -> usize {
        self.trucks
    }

    pub fn stops(&self) -> usize {
        self.stops
    }

    /// Number of `X` and `Y` variables.
    pub fn num_stop_vars(&self) -> usize {
        2 * self.requests * self.stops * self.trucks
    }

    /// Number of `X`, `Y` and `Z` variables.
    pub fn num_binary(&self) -> usize {
        self.num_stop_vars() + self.trucks
    }

    pub fn len(&self) -> usize {
        self.num_binary() + self.aux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn stop(&self, role: Role, request: usize, truck: usize, stop: usize) -> usize {
        debug_assert!(request < self.requests && truck < self.trucks && (1..=self.stops).contains(&stop));
        ((truck * self.stops + stop - 1) * self.requests + request) * 2 + role.offset()
    }

    #[inline]
    pub fn used(&self, truck: usize) -> usize {
        debug_assert!(truck < self.trucks);
        self.num_stop_vars() + truck
    }

    /// All `X`/`Y` ids at one stop of one truck, ordered by request then role.
    pub fn occupancy(&self, truck: usize, stop: usize) -> impl Iterator<Item = usize> + '_ {
        let base = self.stop(Role::X, 0, truck, stop);
        base..base + 2 * self.requests
    }

    pub(crate) fn push_aux(&mut self, key: VarKey) -> usize {
        let id = self.len();
        let previous = self.aux_ids.insert(key, id);
        assert!(previous.is_none(), "duplicate variable {key:?}");
        self.aux.push(key);
        id
    }

    pub fn id(&self, key: &VarKey) -> Option<usize> {
        match *key {
            VarKey::Stop { role, request, truck, stop } => (request < self.requests
                && truck < self.trucks
                && (1..=self.stops).contains(&stop))
            .then(|| self.stop(role, request, truck, stop)),
            VarKey::Used { truck } => (truck < self.trucks).then(|| self.used(truck)),
            _ => self.aux_ids.get(key).copied().or_else(|| {
                // lookup table is not serialized
                self.aux.iter().position(|k| k == key).map(|p| self.num_binary() + p)
            }),
        }
    }

    pub fn key(&self, id: usize) -> Option<VarKey> {
        let stop_vars = self.num_stop_vars();
        if id < stop_vars {
            let role = if id % 2 == 0 { Role::X } else { Role::Y };
            let rest = id / 2;
            let request = rest % self.requests;
            let rest = rest / self.requests;
            Some(VarKey::Stop { role, request, truck: rest / self.stops, stop: rest % self.stops + 1 })
        } else if id < self.num_binary() {
            Some(VarKey::Used { truck: id - stop_vars })
        } else {
            self.aux.get(id - self.num_binary()).copied()
        }
    }
}

/// Which modelling constraint a row, penalty or violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintLabel {
    A1,
    A2,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    D1,
    D2,
    D3,
    D4,
    D5,
    D6,
    D7,
    D8,
    /// Linearised product of two binaries.
    Lin,
    CAlpha,
    CBeta,
}

impl ConstraintLabel {
    pub const CQM: [ConstraintLabel; 8] = [
        ConstraintLabel::D1,
        ConstraintLabel::D2,
        ConstraintLabel::D3,
        ConstraintLabel::D4,
        ConstraintLabel::D5,
        ConstraintLabel::D6,
        ConstraintLabel::D7,
        ConstraintLabel::D8,
    ];

    pub fn as_str(self) -> &'static str {
        use ConstraintLabel::*;
        match self {
            A1 => "A1",
            A2 => "A2",
            C1 => "C1",
            C2 => "C2",
            C3 => "C3",
            C4 => "C4",
            C5 => "C5",
            C6 => "C6",
            C7 => "C7",
            C8 => "C8",
            D1 => "D1",
            D2 => "D2",
            D3 => "D3",
            D4 => "D4",
            D5 => "D5",
            D6 => "D6",
            D7 => "D7",
            D8 => "D8",
            Lin => "LIN",
            CAlpha => "CALPHA",
            CBeta => "CBETA",
        }
    }
}

impl fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bijective() {
        let mut index = VarIndex::new(3, 2);
        let leg = VarKey::Leg { truck: 1, stop: 2, from: (Role::X, 0), to: (Role::Y, 2) };
        let id = index.push_aux(leg);
        assert_eq!(id, 4 * 9 * 2 + 2);
        for id in 0..index.len() {
            let key = index.key(id).unwrap();
            assert_eq!(index.id(&key), Some(id), "{key:?}");
        }
        assert_eq!(index.key(index.len()), None);
        assert_eq!(index.num_binary(), 74);
    }

    #[test]
    fn occupancy_covers_one_stop() {
        let index = VarIndex::new(2, 2);
        let ids: Vec<usize> = index.occupancy(1, 3).collect();
        assert_eq!(ids.len(), 4);
        for id in ids {
            assert!(matches!(index.key(id), Some(VarKey::Stop { truck: 1, stop: 3, .. })));
        }
    }

    #[test]
    fn names() {
        assert_eq!(VarKey::Stop { role: Role::Y, request: 0, truck: 1, stop: 2 }.name(), "y_1_2_2");
        assert_eq!(VarKey::Leg { truck: 0, stop: 2, from: (Role::X, 0), to: (Role::Y, 0) }.name(), "w_1_2_x1_y1");
    }
}
