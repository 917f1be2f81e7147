//! Do-interventions on a fitted linear structural model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModelError, NecoModel};
use crate::structure::Dag;

/// Assets fixed by intervention and the log-returns imposed on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    targets: BTreeMap<usize, f64>,
}

impl InterventionSpec {
    pub fn new(n_nodes: usize, targets: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for (node, value) in targets {
            if node >= n_nodes || !value.is_finite() || map.insert(node, value).is_some() {
                return Err(ModelError::InvalidIntervention(format!("bad target {node} = {value}")));
            }
        }
        if map.is_empty() {
            return Err(ModelError::InvalidIntervention("no targets".into()));
        }
        Ok(Self { targets: map })
    }

    pub fn targets(&self) -> &BTreeMap<usize, f64> {
        &self.targets
    }
}

/// Expected contemporaneous log-returns after `do(X_A = x*)`: intervened
/// assets take their imposed values, every other asset its intercept plus
/// the contagion from its parents, with lagged terms held at zero.
pub fn predict_do(model: &NecoModel, dag: &Dag, spec: &InterventionSpec) -> Result<Vec<f64>, ModelError> {
    propagate(model, dag, spec.targets())
}

/// Expectations with no intervention, under the same zero-lag convention.
pub fn implied_means(model: &NecoModel, dag: &Dag) -> Result<Vec<f64>, ModelError> {
    propagate(model, dag, &BTreeMap::new())
}

fn propagate(model: &NecoModel, dag: &Dag, fixed: &BTreeMap<usize, f64>) -> Result<Vec<f64>, ModelError> {
    let n = dag.n_nodes();
    if model.fits.len() != n {
        return Err(ModelError::ShapeMismatch { columns: model.fits.len(), assets: model.assets.len(), nodes: n });
    }
    if let Some(i) = (0..n).find(|&i| model.fits[i].parents != dag.parents(i)) {
        return Err(ModelError::ParentMismatch(model.assets[i].clone()));
    }
    if let Some(&bad) = fixed.keys().find(|&&k| k >= n) {
        return Err(ModelError::InvalidIntervention(format!("target {bad} outside {n} nodes")));
    }
    let mut value = vec![0.0; n];
    for v in dag.topological_order() {
        value[v] = match fixed.get(&v) {
            Some(&x) => x,
            None => {
                let fit = &model.fits[v];
                fit.intercept + fit.parents.iter().zip(&fit.beta).map(|(&p, b)| b * value[p]).sum::<f64>()
            }
        };
    }
    Ok(value)
}
