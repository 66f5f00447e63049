use super::{NodeId, PetriNet};

/// Place × transition incidence matrix, rows and columns in creation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub places: Vec<NodeId>,
    pub transitions: Vec<NodeId>,
    /// `entries[row][col]`
    pub entries: Vec<Vec<i64>>,
}

impl IncidenceMatrix {
    pub fn of(net: &PetriNet) -> Self {
        let places: Vec<NodeId> = net.places().collect();
        let transitions: Vec<NodeId> = net.transitions().collect();
        let entries = places
            .iter()
            .map(|p| {
                transitions
                    .iter()
                    .map(|t| i64::from(net.has_arc(*t, *p)) - i64::from(net.has_arc(*p, *t)))
                    .collect()
            })
            .collect();
        IncidenceMatrix {
            places,
            transitions,
            entries,
        }
    }

    pub fn row_of(&self, p: NodeId) -> Option<usize> {
        self.places.iter().position(|x| *x == p)
    }

    pub fn col_of(&self, t: NodeId) -> Option<usize> {
        self.transitions.iter().position(|x| *x == t)
    }

    pub fn entry(&self, p: NodeId, t: NodeId) -> i64 {
        match (self.row_of(p), self.col_of(t)) {
            (Some(r), Some(c)) => self.entries[r][c],
            _ => 0,
        }
    }

    pub fn row(&self, p: NodeId) -> Option<&[i64]> {
        self.row_of(p).map(|r| self.entries[r].as_slice())
    }

    pub fn column(&self, t: NodeId) -> Option<Vec<i64>> {
        self.col_of(t)
            .map(|c| self.entries.iter().map(|row| row[c]).collect())
    }

    /// Adds the short-circuit column (`+1` at `source`, `−1` at `sink`) at the end.
    pub fn short_circuited(&self, source: NodeId, sink: NodeId) -> Vec<Vec<i64>> {
        self.places
            .iter()
            .zip(&self.entries)
            .map(|(p, row)| {
                let mut row = row.clone();
                row.push(if *p == source {
                    1
                } else if *p == sink {
                    -1
                } else {
                    0
                });
                row
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::net::WorkflowNet;

    #[test]
    fn start_column() {
        let wf = WorkflowNet::initial();
        let m = wf.incidence_matrix();
        assert_eq!(m.column(wf.start).unwrap(), vec![-1, 1, 0]);
        assert_eq!(m.column(wf.end).unwrap(), vec![0, -1, 1]);
    }

    #[test]
    fn arc_free_transition_has_zero_column() {
        let mut wf = WorkflowNet::initial();
        let t = wf.add_fresh_transition(None);
        assert_eq!(wf.incidence_matrix().column(t).unwrap(), vec![0, 0, 0]);
    }
}
