//! Recursive (Cholesky) identification of structural shocks.
//!
//! Ordering the policy series first and factoring the residual covariance as
//! O O' makes the first structural shock the policy innovation: column k of O
//! is the contemporaneous response pattern of the k-th shock. Each policy
//! column is rescaled by its diagonal entry so the identified shock moves its
//! own policy by exactly one unit; the outcome entries of that column are the
//! shock coefficients gamma. In a bivariate system gamma reduces to
//! cov(policy residual, outcome residual) / var(policy residual), the
//! regression slope of one residual on the other.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::inference::{IrfBundle, IrfSpace, PolicyIrf};
use crate::linalg;
use crate::var::VarModel;

/// Result of a recursive identification.
#[derive(Debug, Clone)]
pub struct StructuralIdentification {
    ordering: Vec<usize>,
    labels: Vec<String>,
    n_policies: usize,
    chol: DMatrix<f64>,
    impacts: DMatrix<f64>,
}

impl StructuralIdentification {
    /// The permutation applied to the model's series: position a of the
    /// identified system holds original series `ordering()[a]`.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    /// Series labels in identification order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// How many leading positions are policy shocks.
    pub fn n_policies(&self) -> usize {
        self.n_policies
    }

    /// Lower-triangular factor of the permuted residual covariance.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// n x K matrix of normalized impact columns; column k is the
    /// contemporaneous response of every series (identification order) to a
    /// unit shock in policy k. Entry (k, k) is exactly 1.
    pub fn impacts(&self) -> &DMatrix<f64> {
        &self.impacts
    }

    /// Impact column for one policy.
    pub fn impact(&self, policy: usize) -> DMatrix<f64> {
        self.impacts.column(policy).into_owned().reshape_generic(
            nalgebra::Dyn(self.impacts.nrows()),
            nalgebra::Dyn(1),
        )
    }

    /// Shock coefficients: rows are non-policy series (identification order),
    /// columns are policies. gamma[(j, k)] is the contemporaneous movement of
    /// outcome j per unit shock in policy k.
    pub fn gamma(&self) -> DMatrix<f64> {
        let n = self.impacts.nrows();
        let k = self.n_policies;
        self.impacts.view((k, 0), (n - k, k)).into_owned()
    }
}

/// Identify structural shocks from a fitted VAR by Cholesky factorization.
///
/// `ordering`, when given, permutes the series before factoring; `None` keeps
/// the model order. The first `n_policies` positions of the (permuted) system
/// are treated as policy shocks and their impact columns are normalized to a
/// unit own-move. Fails with `NotPositiveDefinite` when the residual
/// covariance has a pivot at or below the tolerance.
pub fn cholesky_identify(
    model: &VarModel,
    ordering: Option<&[usize]>,
    n_policies: usize,
) -> Result<StructuralIdentification> {
    identify_covariance(model.sigma(), model.labels(), ordering, n_policies)
}

/// The same identification on a bare residual covariance, for models other
/// than a plain VAR (the error-correction fit identifies its shocks from the
/// difference-equation covariance this way).
pub fn identify_covariance(
    sigma: &DMatrix<f64>,
    labels: &[String],
    ordering: Option<&[usize]>,
    n_policies: usize,
) -> Result<StructuralIdentification> {
    let n = sigma.nrows();
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} series",
            labels.len(),
            n
        )));
    }
    let perm: Vec<usize> = match ordering {
        Some(o) => {
            let mut seen = vec![false; n];
            if o.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "ordering has {} entries for {} series",
                    o.len(),
                    n
                )));
            }
            for &i in o {
                if i >= n || seen[i] {
                    return Err(Error::InvalidArgument("ordering is not a permutation".into()));
                }
                seen[i] = true;
            }
            o.to_vec()
        }
        None => (0..n).collect(),
    };
    if n_policies == 0 || n_policies >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_policies < n, got {n_policies} of {n}"
        )));
    }

    let sigma_perm = linalg::permute_square(sigma, &perm);
    let chol = linalg::cholesky_lower(&sigma_perm)?;
    let mut impacts = DMatrix::zeros(n, n_policies);
    for k in 0..n_policies {
        let pivot = chol[(k, k)];
        for i in 0..n {
            impacts[(i, k)] = chol[(i, k)] / pivot;
        }
    }
    let labels = perm.iter().map(|&i| labels[i].clone()).collect();

    Ok(StructuralIdentification {
        ordering: perm,
        labels,
        n_policies,
        chol,
        impacts,
    })
}

/// Structural impulse responses: the reduced-form recursion applied in the
/// identification ordering, hit with each normalized policy impact column.
/// `space` records what the modeled series are (levels or differences); the
/// propagation itself is the same either way.
pub fn structural_irf(
    model: &VarModel,
    ident: &StructuralIdentification,
    horizons: usize,
    space: IrfSpace,
) -> IrfBundle {
    let perm = ident.ordering();
    let coeffs_perm: Vec<DMatrix<f64>> = model
        .coefficients()
        .iter()
        .map(|a| linalg::permute_square(a, perm))
        .collect();
    propagate_impacts(&coeffs_perm, ident, horizons, space)
}

/// Push each normalized impact column through the autoregressive recursion
/// defined by `coeffs_perm`, which must already be in the identification
/// ordering.
pub(crate) fn propagate_impacts(
    coeffs_perm: &[DMatrix<f64>],
    ident: &StructuralIdentification,
    horizons: usize,
    space: IrfSpace,
) -> IrfBundle {
    let n = ident.ordering().len();
    let p = coeffs_perm.len();
    let mut phis = Vec::with_capacity(horizons + 1);
    phis.push(DMatrix::identity(n, n));
    for h in 1..=horizons {
        let mut phi = DMatrix::zeros(n, n);
        for l in 1..=h.min(p) {
            phi += &coeffs_perm[l - 1] * &phis[h - l];
        }
        phis.push(phi);
    }

    let responses = (0..ident.n_policies())
        .map(|k| {
            let impact = ident.impacts().column(k);
            let mut point = DMatrix::zeros(horizons + 1, n);
            for (h, phi) in phis.iter().enumerate() {
                let resp = phi * impact;
                point.row_mut(h).copy_from(&resp.transpose());
            }
            PolicyIrf {
                policy: k,
                point,
                lower: None,
                upper: None,
            }
        })
        .collect();

    IrfBundle::point(space, horizons, ident.labels().to_vec(), responses)
}
