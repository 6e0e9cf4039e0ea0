use serde::{Deserialize, Serialize};

use crate::error::{EchoError, Result};

/// Time series of the ensemble echo and purity with Monte-Carlo error bars.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub m_bar: Vec<f64>,
    pub m_stderr: Vec<f64>,
    /// `Tr rho_bar^2` over the sampled realizations.
    pub purity: Option<Vec<f64>>,
    pub purity_stderr: Option<Vec<f64>>,
    /// Purity with the `1/R` self-overlap bias removed, `(R P - 1)/(R - 1)`.
    pub purity_unbiased: Option<Vec<f64>>,
    /// Standard error of `purity - m_bar^2`.
    pub margin_stderr: Option<Vec<f64>>,
    pub sigma_bar: Option<Vec<f64>>,
    pub sigma_echo: Option<Vec<f64>>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl DecayTrace {
    /// A trace without error bars, e.g. from a closed form or the master
    /// equation.
    pub fn exact(times: Vec<f64>, m_bar: Vec<f64>) -> Result<Self> {
        let n = m_bar.len();
        let t = Self { times, m_bar, m_stderr: vec![0.0; n], ..Default::default() };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.m_bar.len() != n || self.m_stderr.len() != n {
            return Err(EchoError::InvalidInput("trace columns differ in length".into()));
        }
        for (name, col) in [
            ("purity", &self.purity),
            ("purity_stderr", &self.purity_stderr),
            ("purity_unbiased", &self.purity_unbiased),
            ("margin_stderr", &self.margin_stderr),
            ("sigma_bar", &self.sigma_bar),
            ("sigma_echo", &self.sigma_echo),
        ] {
            if col.as_ref().is_some_and(|c| c.len() != n) {
                return Err(EchoError::InvalidInput(format!("column {name} has the wrong length")));
            }
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EchoError::InvalidInput("times are not strictly increasing".into()));
        }
        if self.m_bar.iter().any(|m| !(*m >= 0.0 && *m <= 1.0 + 1e-8)) {
            return Err(EchoError::InvalidInput("m_bar outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Same trace with `m_bar` (and its error bars) multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        t.m_bar.iter_mut().for_each(|m| *m *= c);
        t.m_stderr.iter_mut().for_each(|m| *m *= c);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DecayTrace::exact(vec![0.0, 1.0], vec![1.0, 0.5]).is_ok());
        assert!(DecayTrace::exact(vec![0.0, 0.0], vec![1.0, 0.5]).is_err());
        assert!(DecayTrace::exact(vec![0.0, 1.0], vec![1.0, 1.5]).is_err());
        assert!(DecayTrace::exact(vec![0.0], vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut t = DecayTrace::exact(vec![0.0, 1.0], vec![1.0, 0.25]).unwrap();
        t.purity = Some(vec![1.0, 0.5]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<DecayTrace>(&s).unwrap(), t);
    }
}
