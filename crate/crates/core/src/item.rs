/// One record to be clustered.
///
/// Features are expected in `[0, 1]` after per-dimension min-max scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct DataItem {
    pub features: Vec<f64>,
    pub true_label: Option<u32>,
    pub source_index: usize,
}

impl DataItem {
    pub fn new(features: Vec<f64>, true_label: Option<u32>, source_index: usize) -> Self {
        Self {
            features,
            true_label,
            source_index,
        }
    }
}
