use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator};

const PSD_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-9;

/// A positive operator-valued measure on a finite-dimensional system.
///
/// When `has_completion` is set, the last element is the no-click (or
/// inefficiency) completion `1 - sum of the click elements`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
    has_completion: bool,
}

impl Povm {
    /// Validates positivity (`>= -1e-10`) and completeness (`1e-9`).
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        Self::validated(elements, false)
    }

    fn validated(elements: Vec<HermitianOperator>, has_completion: bool) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let d = first.dim();
        let mut sum = HermitianOperator::zeros(d);
        for (k, e) in elements.iter().enumerate() {
            if e.dim() != d {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has dimension {} instead of {d}",
                    e.dim()
                )));
            }
            let min = e.min_eigenvalue();
            if min < -PSD_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has negative eigenvalue {min:e}"
                )));
            }
            sum = &sum + e;
        }
        let defect = (&sum - &HermitianOperator::identity(d)).max_abs();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {defect:e}"
            )));
        }
        Ok(Self {
            elements,
            has_completion,
        })
    }

    /// Projective measurement in the orthonormal basis given by the columns of `u`.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let elements = (0..u.ncols())
            .map(|k| HermitianOperator::projector(&u.column(k).into_owned()))
            .collect();
        Self::new(elements)
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &HermitianOperator {
        &self.elements[k]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn has_completion(&self) -> bool {
        self.has_completion
    }

    /// Elements other than the completion.
    pub fn click_elements(&self) -> &[HermitianOperator] {
        if self.has_completion {
            &self.elements[..self.elements.len() - 1]
        } else {
            &self.elements
        }
    }

    /// `sqrt(M_k)` for every element.
    pub fn sqrt_elements(&self) -> Vec<HermitianOperator> {
        self.elements
            .iter()
            .map(|e| e.eig().map(|x| x.max(0.0).sqrt()))
            .collect()
    }
}

/// Adds a vacuum dimension: every element becomes `M ⊕ 0` and a no-click
/// element `1 - sum (M ⊕ 0)` is appended.
pub fn extend_noclick(povm: &Povm) -> Povm {
    let zero = HermitianOperator::zeros(1);
    let mut elements: Vec<HermitianOperator> = povm
        .click_elements()
        .iter()
        .map(|e| e.direct_sum(&zero))
        .collect();
    let d = povm.dim() + 1;
    let mut completion = HermitianOperator::identity(d);
    for e in &elements {
        completion = &completion - e;
    }
    elements.push(completion);
    Povm {
        elements,
        has_completion: true,
    }
}

/// Scales each click element by its efficiency and recomputes the
/// completion `1 - sum eta_k M_k` (replacing an existing one).
pub fn apply_efficiency(povm: &Povm, eta: &[f64]) -> Result<Povm> {
    let clicks = povm.click_elements();
    if eta.len() != clicks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} efficiencies for {} click elements",
            eta.len(),
            clicks.len()
        )));
    }
    if let Some(&bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::EfficiencyOutOfRange(bad));
    }
    let mut elements: Vec<HermitianOperator> =
        clicks.iter().zip(eta).map(|(m, &e)| m.scale(e)).collect();
    let mut completion = HermitianOperator::identity(povm.dim());
    for e in &elements {
        completion = &completion - e;
    }
    elements.push(completion);
    Povm::validated(elements, true)
}
