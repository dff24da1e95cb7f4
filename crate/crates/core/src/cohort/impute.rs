use serde::{Deserialize, Serialize};

use super::Channel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputePolicy {
    Mean,
    #[default]
    Linear,
}

/// Fills missing slots. Present slots are returned untouched.
///
/// `Mean` uses the mean of the channel's present values. `Linear`
/// interpolates between the nearest present neighbours and copies the nearest
/// present value into leading and trailing gaps.
pub fn impute(channel: &Channel, policy: ImputePolicy) -> Result<Vec<f64>> {
    let present: Vec<usize> = (0..channel.len()).filter(|&i| !channel.missing[i]).collect();
    if present.is_empty() {
        return Err(Error::ChannelEmpty);
    }
    let mut out = channel.values.clone();
    match policy {
        ImputePolicy::Mean => {
            let mean = present.iter().map(|&i| channel.values[i]).sum::<f64>() / present.len() as f64;
            for (v, &m) in out.iter_mut().zip(&channel.missing) {
                if m {
                    *v = mean;
                }
            }
        }
        ImputePolicy::Linear => {
            let first = present[0];
            let last = *present.last().unwrap();
            for i in 0..first {
                out[i] = channel.values[first];
            }
            for i in last + 1..out.len() {
                out[i] = channel.values[last];
            }
            for w in present.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b - a < 2 {
                    continue;
                }
                let (va, vb) = (channel.values[a], channel.values[b]);
                let span = (b - a) as f64;
                for i in a + 1..b {
                    let t = (i - a) as f64 / span;
                    out[i] = va + t * (vb - va);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch(slots: &[Option<f64>]) -> Channel {
        Channel::from_options(slots)
    }

    #[test]
    fn examples() {
        assert_eq!(
            impute(&ch(&[Some(1.0), None, Some(3.0)]), ImputePolicy::Linear).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            impute(&ch(&[Some(2.0), None, None, Some(2.0)]), ImputePolicy::Mean).unwrap(),
            vec![2.0; 4]
        );
        assert_eq!(
            impute(&ch(&[None, Some(5.0), Some(5.0)]), ImputePolicy::Linear).unwrap(),
            vec![5.0; 3]
        );
        assert_eq!(
            impute(&ch(&[Some(4.0), Some(6.0), None]), ImputePolicy::Linear).unwrap(),
            vec![4.0, 6.0, 6.0]
        );
    }

    #[test]
    fn all_missing_is_error() {
        for p in [ImputePolicy::Mean, ImputePolicy::Linear] {
            assert!(matches!(impute(&ch(&[None, None]), p), Err(Error::ChannelEmpty)));
        }
    }

    proptest! {
        #[test]
        fn present_values_untouched(
            slots in proptest::collection::vec(proptest::option::weighted(0.7, 0.0f64..200.0), 1..60),
            linear in any::<bool>(),
        ) {
            prop_assume!(slots.iter().any(Option::is_some));
            let policy = if linear { ImputePolicy::Linear } else { ImputePolicy::Mean };
            let out = impute(&ch(&slots), policy).unwrap();
            prop_assert_eq!(out.len(), slots.len());
            for (o, s) in out.iter().zip(&slots) {
                prop_assert!(o.is_finite());
                if let Some(v) = s {
                    prop_assert_eq!(o, v);
                }
            }
        }
    }
}
