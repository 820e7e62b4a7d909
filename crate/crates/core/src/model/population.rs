/// The candidate types still matching a respondent, with their head count.
///
/// Members are indices into the instance's candidate types, kept in
/// ascending order. A view is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PopulationView {
    members: Vec<u32>,
    total: u64,
}

impl PopulationView {
    pub(crate) fn from_parts(members: Vec<u32>, total: u64) -> Self {
        debug_assert!(!members.is_empty());
        debug_assert!(total > 0);
        PopulationView { members, total }
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn member_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|&i| i as usize)
    }

    pub fn total_quantity(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, candidate: usize) -> bool {
        self.members.binary_search(&(candidate as u32)).is_ok()
    }
}
