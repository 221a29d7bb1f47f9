use num_complex::Complex64;

/// Complex amplitudes `V_k = P_k + iQ_k` on `D_N⁺`, in grid storage order.
///
/// The `D⁻` half is the Hermitian mirror `V_{−k} = conj(V_k)` and is never
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl ModeField {
    pub fn zeros(len: usize) -> Self {
        ModeField {
            values: vec![Complex64::new(0.0, 0.0); len],
            t: 0.0,
        }
    }

    pub fn from_values(values: Vec<Complex64>) -> Self {
        ModeField { values, t: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-mode actions `|V_k|²`.
    pub fn actions(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
