//! External (precomputed) token vector ingestion.
//!
//! File format: one block per sentence, blocks separated by blank lines,
//! one line of whitespace-separated floats per token. The vectors are
//! produced offline (e.g. averaged subword embeddings from a pretrained
//! language model) and are never updated during training.

use super::ModelError;

/// Parses an external-embedding file into per-sentence token vectors.
/// Every line must have the same dimension.
pub fn parse_external_embeddings(text: &str) -> Result<Vec<Vec<Vec<f64>>>, ModelError> {
    let mut sentences = Vec::new();
    let mut current: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let vector: Vec<f64> = line
            .split_whitespace()
            .map(|f| {
                f.parse().map_err(|_| {
                    ModelError::Data(format!(
                        "line {}: {f:?} is not a number",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_, _>>()?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(ModelError::Dimension {
                    what: "external vector",
                    expected: d,
                    got: vector.len(),
                });
            }
            _ => {}
        }
        current.push(vector);
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_and_dims() {
        let text = "1.0 2.0\n3.0 4.0\n\n5.0 6.0\n";
        let parsed = parse_external_embeddings(text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].len(), 2);
        assert_eq!(parsed[1], vec![vec![5.0, 6.0]]);
    }

    #[test]
    fn ragged_dimensions_rejected() {
        let err = parse_external_embeddings("1.0 2.0\n3.0\n").unwrap_err();
        assert!(matches!(err, ModelError::Dimension { .. }));
    }

    #[test]
    fn empty_file_is_empty() {
        assert!(parse_external_embeddings("").unwrap().is_empty());
    }
}
