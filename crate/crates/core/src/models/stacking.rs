use super::{Example, Instance, Learner};
use crate::error::{Error, Result};

/// Fits `learner` on the pooled rows of every other patient and appends its
/// prediction (mmol/L) to each target instance as one extra feature.
pub fn stack(others: &[Example], learner: &dyn Learner, target: &[Instance]) -> Result<Vec<Instance>> {
    if others.is_empty() {
        return Err(Error::fit(
            learner.name(),
            "stacking needs at least one other patient with rows",
        ));
    }
    let model = learner.fit(others)?;
    Ok(target
        .iter()
        .map(|x| {
            let mut features = x.features.clone();
            features.push(model.predict(x));
            Instance {
                features,
                meal: x.meal,
            }
        })
        .collect())
}
