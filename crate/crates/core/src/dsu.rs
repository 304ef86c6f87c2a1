/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    /// Resets to `n` singletons, reusing the allocation.
    pub fn reset(&mut self, n: usize) {
        self.parent.clear();
        self.parent.extend(0..n as u32);
        self.size.clear();
        self.size.resize(n, 1);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Representative lookup without compression.
    pub fn find_immutable(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`. Returns `Some((root, absorbed))` when two
    /// distinct sets were joined, `None` when they were already one set.
    pub fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return None;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        Some((ra, rb))
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singletons_then_merge() {
        let mut d = DisjointSet::new(5);
        assert_eq!(d.find(3), 3);
        assert!(d.union(0, 1).is_some());
        assert!(d.union(1, 0).is_none());
        d.union(3, 4);
        d.union(1, 4);
        assert_eq!(d.find(0), d.find(3));
        assert_ne!(d.find(0), d.find(2));
        assert_eq!(d.set_size(4), 4);
    }

    proptest! {
        #[test]
        fn find_is_idempotent(n in 1usize..40, pairs in proptest::collection::vec((0usize..40, 0usize..40), 0..60)) {
            let mut d = DisjointSet::new(n);
            for (a, b) in pairs {
                d.union(a % n, b % n);
            }
            for v in 0..n {
                let r = d.find(v);
                prop_assert_eq!(d.find(r), r);
                prop_assert_eq!(d.find_immutable(v), r);
            }
            let roots: Vec<usize> = (0..n).filter(|&v| d.find(v) == v).collect();
            let total: usize = roots.iter().map(|&r| d.set_size(r)).sum();
            prop_assert_eq!(total, n);
        }
    }
}
