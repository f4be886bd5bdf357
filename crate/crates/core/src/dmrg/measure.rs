//! Exact expectation values of an MPS by transfer-matrix contraction.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{MpsState, SiteTensor};
use crate::error::Result;
use crate::model::{local, ModelParams};
use crate::observables::{reference_site, ObservableSet};

/// `L'[a,b] = Σ L[l,l'] A[l,s,a] O[s,s'] A[l',s',b]`, `O = 1` when absent.
fn push_left(env: &[f64], t: &SiteTensor, op: Option<&DMatrix<f64>>) -> Vec<f64> {
    let (dl, d, dr) = (t.left, t.phys, t.right);
    // X[l',s,a] = Σ_l L[l,l'] A[l,s,a]
    let mut x = vec![0.0; dl * d * dr];
    for l in 0..dl {
        for lp in 0..dl {
            let c = env[l * dl + lp];
            if c == 0.0 {
                continue;
            }
            for sa in 0..d * dr {
                x[lp * d * dr + sa] += c * t.data[l * d * dr + sa];
            }
        }
    }
    let mut out = vec![0.0; dr * dr];
    for lp in 0..dl {
        for s in 0..d {
            for sp in 0..d {
                let o = match op {
                    Some(m) => m[(s, sp)],
                    None => f64::from(u8::from(s == sp)),
                };
                if o == 0.0 {
                    continue;
                }
                let xrow = &x[(lp * d + s) * dr..(lp * d + s + 1) * dr];
                let arow = &t.data[(lp * d + sp) * dr..(lp * d + sp + 1) * dr];
                for a in 0..dr {
                    let xa = o * xrow[a];
                    if xa == 0.0 {
                        continue;
                    }
                    for b in 0..dr {
                        out[a * dr + b] += xa * arow[b];
                    }
                }
            }
        }
    }
    out
}

/// `R'[a,b] = Σ A[a,s,r] O[s,s'] A[b,s',r'] R[r,r']`.
fn push_right(env: &[f64], t: &SiteTensor, op: Option<&DMatrix<f64>>) -> Vec<f64> {
    let (dl, d, dr) = (t.left, t.phys, t.right);
    // Y[b,s',r] = Σ_r' A[b,s',r'] R[r,r']
    let mut y = vec![0.0; dl * d * dr];
    for bs in 0..dl * d {
        for r in 0..dr {
            let mut acc = 0.0;
            for rp in 0..dr {
                acc += t.data[bs * dr + rp] * env[r * dr + rp];
            }
            y[bs * dr + r] = acc;
        }
    }
    let mut out = vec![0.0; dl * dl];
    for a in 0..dl {
        for s in 0..d {
            for sp in 0..d {
                let o = match op {
                    Some(m) => m[(s, sp)],
                    None => f64::from(u8::from(s == sp)),
                };
                if o == 0.0 {
                    continue;
                }
                let arow = &t.data[(a * d + s) * dr..(a * d + s + 1) * dr];
                for b in 0..dl {
                    let yrow = &y[(b * d + sp) * dr..(b * d + sp + 1) * dr];
                    let v: f64 = arow.iter().zip(yrow).map(|(p, q)| p * q).sum();
                    out[a * dl + b] += o * v;
                }
            }
        }
    }
    out
}

fn close(left: &[f64], right: &[f64]) -> f64 {
    left.iter().zip(right).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm_squared(state: &MpsState) -> f64 {
    let mut env = vec![1.0];
    for t in &state.site_tensors {
        env = push_left(&env, t, None);
    }
    env[0]
}

/// Local expectations and the connected `σᶻ` correlator from the centre site.
pub fn mps_observables(state: &MpsState, p: &ModelParams) -> Result<ObservableSet> {
    state.check_matches(p)?;
    let n = state.n_sites;
    let nf = p.n_fock;
    let sites = &state.site_tensors;

    let mut lefts = Vec::with_capacity(n + 1);
    lefts.push(vec![1.0]);
    for t in sites {
        let next = push_left(lefts.last().expect("seeded"), t, None);
        lefts.push(next);
    }
    let mut rights = vec![Vec::new(); n + 1];
    rights[n] = vec![1.0];
    for j in (0..n).rev() {
        rights[j] = push_right(&rights[j + 1], &sites[j], None);
    }
    let norm2 = lefts[n][0];

    let num = local::number(nf);
    let sx = local::sigma_x(nf);
    let sz = local::sigma_z(nf);
    let ann = local::annihilation(nf);
    let expect = |j: usize, op: &DMatrix<f64>| -> f64 {
        close(&push_left(&lefts[j], &sites[j], Some(op)), &rights[j + 1]) / norm2
    };
    let boson: Vec<f64> = (0..n).map(|j| expect(j, &num)).collect();
    let sigma_x: Vec<f64> = (0..n).map(|j| expect(j, &sx)).collect();
    let sigma_z: Vec<f64> = (0..n).map(|j| expect(j, &sz)).collect();
    let a: Vec<Complex64> = (0..n).map(|j| Complex64::new(expect(j, &ann), 0.0)).collect();

    let reference = reference_site(n);
    let mut zz = vec![0.0; n];
    zz[reference] = expect(reference, &(&sz * &sz));
    let mut env = push_left(&lefts[reference], &sites[reference], Some(&sz));
    for j in reference + 1..n {
        zz[j] = close(&push_left(&env, &sites[j], Some(&sz)), &rights[j + 1]) / norm2;
        env = push_left(&env, &sites[j], None);
    }
    let mut env = push_right(&rights[reference + 1], &sites[reference], Some(&sz));
    for j in (0..reference).rev() {
        zz[j] = close(&lefts[j], &push_right(&env, &sites[j], Some(&sz))) / norm2;
        env = push_right(&env, &sites[j], None);
    }
    let cz_profile = (0..n).map(|j| zz[j] - sigma_z[reference] * sigma_z[j]).collect();

    Ok(ObservableSet {
        n: boson.iter().sum::<f64>() / n as f64,
        boson_number: boson,
        sigma_x,
        sigma_z,
        a,
        cz_reference: reference,
        cz_profile,
        cz_matrix: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_product_state() {
        let p = ModelParams::new(6, 1.0, 0.0, 1.0, 3).unwrap();
        let obs = mps_observables(&MpsState::vacuum(&p).unwrap(), &p).unwrap();
        assert_eq!(obs.n, 0.0);
        assert!(obs.sigma_z.iter().all(|&z| z == 1.0));
        assert!(obs.cz_profile.iter().all(|&c| c.abs() < 1e-15));
    }
}
