use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphIoError, LabeledInstance, PropertyKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, GraphIoError> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), GraphIoError> {
        let parts = self.as_array();
        let ok = parts.iter().all(|&p| p > 0.0 && p.is_finite())
            && (parts.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(GraphIoError::Ratios(parts))
        }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitWarning {
    EmptyStratum { property: PropertyKind, count: usize },
}

/// Partition of item indices; each list is sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `n` items. Ties in the remainder go
/// to the earlier part.
fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: [usize; 3] = [0; 3];
    for (s, e) in sizes.iter_mut().zip(&exact) {
        *s = (e + 1e-9).floor() as usize;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Stratified split over item properties, deterministic per seed.
pub fn split_indices(
    properties: &[PropertyKind],
    ratios: SplitRatios,
    seed: u64,
) -> Result<(DatasetSplit, Vec<SplitWarning>), GraphIoError> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DatasetSplit::default();
    let mut warnings = Vec::new();
    for p in PropertyKind::ALL {
        let mut members: Vec<usize> = (0..properties.len())
            .filter(|&i| properties[i] == p)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            log::warn!("property {p} has only {} instances", members.len());
            warnings.push(SplitWarning::EmptyStratum {
                property: p,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let [a, b, _] = apportion(members.len(), ratios.as_array());
        split.train.extend_from_slice(&members[..a]);
        split.val.extend_from_slice(&members[a..a + b]);
        split.test.extend_from_slice(&members[a + b..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok((split, warnings))
}

/// Stratified split of labelled instances into (train, val, test).
pub fn split_dataset(
    instances: Vec<LabeledInstance>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<([Vec<LabeledInstance>; 3], Vec<SplitWarning>), GraphIoError> {
    let props: Vec<PropertyKind> = instances.iter().map(|i| i.graph.property).collect();
    let (split, warnings) = split_indices(&props, ratios, seed)?;
    let mut slot = vec![0u8; instances.len()];
    for &i in &split.val {
        slot[i] = 1;
    }
    for &i in &split.test {
        slot[i] = 2;
    }
    let mut parts: [Vec<LabeledInstance>; 3] = Default::default();
    for (inst, s) in instances.into_iter().zip(slot) {
        parts[s as usize].push(inst);
    }
    Ok((parts, warnings))
}
