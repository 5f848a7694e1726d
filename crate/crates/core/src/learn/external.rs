use std::collections::BTreeMap;
use std::path::Path;

use super::LearnError;

/// Reads `commit_id,proba` rows produced by an outside classifier.
pub fn load_external_predictions(path: &Path) -> Result<BTreeMap<String, f64>, LearnError> {
    let err = |m: String| LearnError::ExternalPredictions(m);
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| err(e.to_string()))?.clone();
    let col =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| err(format!("missing column `{name}`")));
    let (id_col, p_col) = (col("commit_id")?, col("proba")?);
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let id = rec.get(id_col).unwrap_or("").to_ascii_lowercase();
        let raw = rec.get(p_col).unwrap_or("");
        let p: f64 = raw
            .parse()
            .ok()
            .filter(|p: &f64| (0.0..=1.0).contains(p))
            .ok_or_else(|| err(format!("row {}: probability `{raw}` outside [0, 1]", i + 1)))?;
        if out.insert(id.clone(), p).is_some() {
            return Err(err(format!("commit {id} listed twice")));
        }
    }
    Ok(out)
}

/// Probabilities in the order of `commit_ids`.
pub fn align_external(preds: &BTreeMap<String, f64>, commit_ids: &[String]) -> Result<Vec<f64>, LearnError> {
    commit_ids
        .iter()
        .map(|id| {
            preds
                .get(id)
                .copied()
                .ok_or_else(|| LearnError::ExternalPredictions(format!("no prediction for commit {id}")))
        })
        .collect()
}
