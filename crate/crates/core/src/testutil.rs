use crate::model::{LinkNetwork, NormalizedChannel};
use crate::numerics::DenseMatrix;

/// Two links with unit direct gain, cross gain `g`, noise 0.1, target 1 and
/// budget 0.2: `A = [[1, -g], [-g, 1]]`, `c = (0.5, 0.5)`.
pub fn symmetric_network(g: f64) -> LinkNetwork {
    let gains = DenseMatrix::from_rows(&[vec![1.0, g], vec![g, 1.0]]).unwrap();
    LinkNetwork::new(gains, vec![0.1; 2], vec![1.0; 2], vec![0.2; 2]).unwrap()
}

pub fn symmetric_channel(g: f64) -> NormalizedChannel {
    NormalizedChannel::from_network(&symmetric_network(g)).unwrap()
}

/// Channel from off-diagonal magnitudes `|a_kj|` (diagonal ignored).
pub fn channel_from_abs(abs: &[&[f64]], c: &[f64], budget: &[f64]) -> NormalizedChannel {
    let k = c.len();
    let mut a = DenseMatrix::identity(k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                a[(i, j)] = -abs[i][j];
            }
        }
    }
    NormalizedChannel::from_parts(a, c.to_vec(), budget.to_vec()).unwrap()
}
