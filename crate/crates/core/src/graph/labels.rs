use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Disjoint train / validation / test node index sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Masks {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Masks {
    pub fn new(train: Vec<usize>, validation: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &i in train.iter().chain(&validation).chain(&test) {
            if !seen.insert(i) {
                return Err(Error::InvalidConfig(format!("node {i} appears in more than one mask")));
            }
        }
        Ok(Self {
            train,
            validation,
            test,
        })
    }

    /// Per-class random split: within each class a `train_fraction` share
    /// goes to train (at least one node when the class is non-empty), a
    /// `validation_fraction` share to validation and the rest to test.
    pub fn stratified(
        labels: &[usize],
        class_count: usize,
        train_fraction: f64,
        validation_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_fraction)
            || !(0.0..=1.0).contains(&validation_fraction)
            || train_fraction + validation_fraction > 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "mask fractions {train_fraction} + {validation_fraction} must lie in [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut masks = Masks::default();
        for class in 0..class_count {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            members.shuffle(&mut rng);
            let n = members.len() as f64;
            let n_train = ((train_fraction * n).round() as usize).clamp(1, members.len());
            let n_val = ((validation_fraction * n).round() as usize).min(members.len() - n_train);
            masks.train.extend_from_slice(&members[..n_train]);
            masks.validation.extend_from_slice(&members[n_train..n_train + n_val]);
            masks.test.extend_from_slice(&members[n_train + n_val..]);
        }
        masks.train.sort_unstable();
        masks.validation.sort_unstable();
        masks.test.sort_unstable();
        Ok(masks)
    }

    pub fn get(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }
}

/// Class assignment per node, with optional masks.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLabels {
    labels: Vec<usize>,
    class_count: usize,
    pub masks: Option<Masks>,
}

impl NodeLabels {
    /// `class_count` is inferred as one more than the largest label.
    pub fn new(labels: Vec<usize>) -> Self {
        let class_count = labels.iter().max().map_or(0, |m| m + 1);
        Self {
            labels,
            class_count,
            masks: None,
        }
    }

    pub fn with_class_count(labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidConfig(format!("label {bad} outside [0, {class_count})")));
        }
        Ok(Self {
            labels,
            class_count,
            masks: None,
        })
    }

    pub fn with_masks(mut self, masks: Masks) -> Result<Self> {
        let n = self.labels.len();
        for split in [Split::Train, Split::Validation, Split::Test] {
            if let Some(&index) = masks.get(split).iter().find(|&&i| i >= n) {
                return Err(Error::NodeOutOfRange { index, node_count: n });
            }
        }
        self.masks = Some(masks);
        Ok(self)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }
}
