use crate::error::{Error, Result};

/// Mean squared error `(1/N)·Σ(pred−target)²` and its gradient `(2/N)(pred−target)`.
pub fn mse_loss_and_grad(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::Dimension(format!(
            "mse: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("mse over an empty batch".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_is_zero() {
        let (l, g) = mse_loss_and_grad(&[1.0, -2.0, 3.0], &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hand_values() {
        assert_eq!(mse_loss_and_grad(&[2.0], &[1.0]).unwrap(), (1.0, vec![2.0]));
        assert_eq!(
            mse_loss_and_grad(&[0.0, 4.0], &[0.0, 0.0]).unwrap(),
            (8.0, vec![0.0, 4.0])
        );
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(mse_loss_and_grad(&[], &[]).is_err());
        assert!(mse_loss_and_grad(&[1.0], &[1.0, 2.0]).is_err());
    }
}
