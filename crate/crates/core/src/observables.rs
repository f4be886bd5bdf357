use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Ground-state expectation values shared by the ED and MPS back ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    /// Order parameter `(1/N) Σ ⟨a†a⟩`.
    pub n: f64,
    pub boson_number: Vec<f64>,
    pub sigma_x: Vec<f64>,
    pub sigma_z: Vec<f64>,
    #[serde(with = "complex_vec")]
    pub a: Vec<Complex64>,
    /// 0-based reference site of `cz_profile`.
    pub cz_reference: usize,
    /// `C_z(ref, j)` for every site `j`.
    pub cz_profile: Vec<f64>,
    /// Full connected correlator, only filled by exact diagonalization.
    pub cz_matrix: Option<Vec<Vec<f64>>>,
}

impl ObservableSet {
    /// `max_j max(|⟨a_j⟩|, |⟨σˣ_j⟩|)`, zero when the local gauge symmetry is intact.
    pub fn elitzur_max(&self) -> f64 {
        self.a
            .iter()
            .map(|z| z.norm())
            .chain(self.sigma_x.iter().map(|x| x.abs()))
            .fold(0.0, f64::max)
    }

    /// `(separation, C_z)` pairs to the right of the reference site.
    pub fn cz_decay(&self) -> Vec<(usize, f64)> {
        self.cz_profile
            .iter()
            .enumerate()
            .skip(self.cz_reference + 1)
            .map(|(j, &c)| (j - self.cz_reference, c))
            .collect()
    }
}

/// Centre site `⌈N/2⌉` (1-based) as a 0-based index.
pub fn reference_site(n_sites: usize) -> usize {
    n_sites.div_ceil(2) - 1
}

mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}
