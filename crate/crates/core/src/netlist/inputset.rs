/// A set of input positions (indices into `Circuit::inputs`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InputSet {
    words: Vec<u64>,
}

impl InputSet {
    pub fn empty(width: usize) -> Self {
        InputSet { words: vec![0; width.div_ceil(64)] }
    }

    pub fn singleton(width: usize, pos: usize) -> Self {
        let mut s = Self::empty(width);
        s.insert(pos);
        s
    }

    pub fn insert(&mut self, pos: usize) {
        self.words[pos / 64] |= 1 << (pos % 64);
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    pub fn union_with(&mut self, other: &InputSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b)
        })
    }
}
