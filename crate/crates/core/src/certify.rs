//! Product-dimension certificates for `r` disjoint `p`-cliques, and the
//! partition matroids they induce.
//!
//! Vertex `(j, i)` (clique `j`, position `i`) is element `j * p + i`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{CoverSet, CoveringFamily};

/// Largest element count for exhaustive subset enumeration.
pub const EXHAUSTIVE_MAX_ELEMENTS: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringCertificate {
    pub p: u32,
    pub r: usize,
    pub q: usize,
    /// `colorings[k][j * p + i]` is the color of vertex `(j, i)` in coloring `k`.
    pub colorings: Vec<Vec<u32>>,
}

impl ColoringCertificate {
    pub fn elements(&self) -> usize {
        self.r * self.p as usize
    }

    pub fn color(&self, k: usize, j: usize, i: usize) -> u32 {
        self.colorings[k][j * self.p as usize + i]
    }

    /// The certificate on the first `r` cliques.
    pub fn restrict(&self, r: usize) -> Result<ColoringCertificate> {
        if r == 0 || r > self.r {
            return Err(Error::invalid(format!("cannot restrict {} cliques to {r}", self.r)));
        }
        let keep = r * self.p as usize;
        Ok(ColoringCertificate {
            p: self.p,
            r,
            q: self.q,
            colorings: self.colorings.iter().map(|c| c[..keep].to_vec()).collect(),
        })
    }

    fn well_formed(&self) -> bool {
        self.p >= 1
            && self.r >= 1
            && self.colorings.len() == self.q
            && self
                .colorings
                .iter()
                .all(|c| c.len() == self.elements() && c.iter().all(|&x| x < self.p))
    }
}

/// Coloring `k` gives vertex `(j, i)` the color `(v^j_k + i) mod p`, where
/// `v^j` is row `j` of a `Z_p`-covering family.
pub fn family_to_colorings(family: &CoveringFamily, r: usize) -> Result<ColoringCertificate> {
    if r == 0 || r > family.len() {
        return Err(Error::invalid(format!(
            "need 1 <= r <= |F| = {}, got r = {r}",
            family.len()
        )));
    }
    let p = family.modulus();
    let report = family.check_cover(&CoverSet::full(p))?;
    if !report.is_covering {
        return Err(Error::verification("certificate source is Z_p-covering", report));
    }
    let pv = p.get();
    let colorings = (0..family.ell())
        .map(|k| {
            (0..r)
                .flat_map(|j| {
                    let v = family.row(j)[k];
                    (0..pv).map(move |i| p.add(v, i))
                })
                .collect()
        })
        .collect();
    Ok(ColoringCertificate {
        p: pv,
        r,
        q: family.ell(),
        colorings,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateFailure {
    Malformed,
    /// Two vertices of one clique share a color.
    Improper {
        coloring: usize,
        clique: usize,
        first: usize,
        second: usize,
    },
    /// A non-adjacent pair is never given equal colors.
    Unshared { a: (usize, usize), b: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub witness: Option<CertificateFailure>,
}

/// First unshared pair between cliques `j < j2`, in `(i, i2)` order.
fn unshared_between(cert: &ColoringCertificate, j: usize, j2: usize) -> Option<CertificateFailure> {
    let p = cert.p as usize;
    let mut shared = vec![false; p * p];
    let mut position_of = vec![0usize; p];
    for k in 0..cert.q {
        for i2 in 0..p {
            position_of[cert.color(k, j2, i2) as usize] = i2;
        }
        for i in 0..p {
            shared[i * p + position_of[cert.color(k, j, i) as usize]] = true;
        }
    }
    shared.iter().position(|&s| !s).map(|x| CertificateFailure::Unshared {
        a: (j, x / p),
        b: (j2, x % p),
    })
}

/// Checks properness in every clique and the shared-color condition for
/// every cross-clique pair; reports the first violation found in order.
pub fn verify_certificate(cert: &ColoringCertificate) -> CertificateCheck {
    let fail = |w| CertificateCheck {
        valid: false,
        witness: Some(w),
    };
    if !cert.well_formed() {
        return fail(CertificateFailure::Malformed);
    }
    let p = cert.p as usize;
    for k in 0..cert.q {
        for j in 0..cert.r {
            let mut seen = vec![usize::MAX; p];
            for i in 0..p {
                let c = cert.color(k, j, i) as usize;
                if seen[c] != usize::MAX {
                    return fail(CertificateFailure::Improper {
                        coloring: k,
                        clique: j,
                        first: seen[c],
                        second: i,
                    });
                }
                seen[c] = i;
            }
        }
    }
    let r = cert.r;
    let first = (0..r * r)
        .into_par_iter()
        .filter(|x| x / r < x % r)
        .find_map_first(|x| unshared_between(cert, x / r, x % r));
    match first {
        Some(w) => fail(w),
        None => CertificateCheck {
            valid: true,
            witness: None,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatroidExport {
    pub q: usize,
    pub elements: usize,
    pub p: u32,
    pub r: usize,
    /// `partitions[k][e]` is the part of element `e` in matroid `k`.
    pub partitions: Vec<Vec<u32>>,
    /// `hyperedges[e][k] = partitions[k][e]`.
    pub hyperedges: Vec<Vec<u32>>,
}

impl MatroidExport {
    /// The colorings the partitions were read from.
    pub fn to_certificate(&self) -> ColoringCertificate {
        ColoringCertificate {
            p: self.p,
            r: self.r,
            q: self.q,
            colorings: self.partitions.clone(),
        }
    }

    /// Independent in every partition matroid: no two members share a part.
    pub fn is_common_independent(&self, subset: &[usize]) -> bool {
        self.partitions.iter().all(|part| {
            let mut seen = vec![false; self.p as usize];
            subset.iter().all(|&e| !std::mem::replace(&mut seen[part[e] as usize], true))
        })
    }

    pub fn within_one_clique(&self, subset: &[usize]) -> bool {
        let p = self.p as usize;
        subset.windows(2).all(|w| w[0] / p == w[1] / p)
    }
}

/// Matroid `k` partitions the elements by their color in coloring `k`.
pub fn export_partition_matroids(cert: &ColoringCertificate) -> Result<MatroidExport> {
    let check = verify_certificate(cert);
    if !check.valid {
        return Err(Error::invalid(format!(
            "refusing to export an unverified certificate: {:?}",
            check.witness
        )));
    }
    let hyperedges = (0..cert.elements())
        .map(|e| cert.colorings.iter().map(|c| c[e]).collect())
        .collect();
    Ok(MatroidExport {
        q: cert.q,
        elements: cert.elements(),
        p: cert.p,
        r: cert.r,
        partitions: cert.colorings.clone(),
        hyperedges,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetMode {
    /// Every subset; needs at most [`EXHAUSTIVE_MAX_ELEMENTS`] elements.
    Exhaustive,
    /// Every pair, then `samples` random subsets of size 3 to `p + 1`.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatroidCheck {
    pub holds: bool,
    pub subsets_checked: u64,
    pub exhaustive: bool,
    /// A subset on which independence and clique membership disagree.
    pub witness: Option<Vec<usize>>,
}

/// Checks that a set is independent in every partition matroid iff it lies
/// inside one clique.
pub fn verify_matroid_intersection_equals_cliques(export: &MatroidExport, mode: SubsetMode) -> Result<MatroidCheck> {
    let n = export.elements;
    let agrees = |s: &[usize]| export.is_common_independent(s) == export.within_one_clique(s);
    let mut checked = 0u64;
    let mut subset = Vec::with_capacity(n);
    match mode {
        SubsetMode::Exhaustive => {
            if n > EXHAUSTIVE_MAX_ELEMENTS {
                return Err(Error::invalid(format!(
                    "exhaustive subset check refused for {n} > {EXHAUSTIVE_MAX_ELEMENTS} elements"
                )));
            }
            for mask in 0u32..1 << n {
                subset.clear();
                subset.extend((0..n).filter(|&e| mask >> e & 1 == 1));
                checked += 1;
                if !agrees(&subset) {
                    return Ok(MatroidCheck {
                        holds: false,
                        subsets_checked: checked,
                        exhaustive: true,
                        witness: Some(subset),
                    });
                }
            }
        }
        SubsetMode::Sampled { samples, seed } => {
            for a in 0..n {
                for b in a + 1..n {
                    checked += 1;
                    if !agrees(&[a, b]) {
                        return Ok(MatroidCheck {
                            holds: false,
                            subsets_checked: checked,
                            exhaustive: false,
                            witness: Some(vec![a, b]),
                        });
                    }
                }
            }
            let max_size = (export.p as usize + 1).min(n);
            if max_size >= 3 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..samples {
                    let size = rng.gen_range(3..=max_size);
                    subset.clear();
                    subset.extend(sample(&mut rng, n, size).iter());
                    subset.sort_unstable();
                    checked += 1;
                    if !agrees(&subset) {
                        return Ok(MatroidCheck {
                            holds: false,
                            subsets_checked: checked,
                            exhaustive: false,
                            witness: Some(subset),
                        });
                    }
                }
            }
        }
    }
    Ok(MatroidCheck {
        holds: true,
        subsets_checked: checked,
        exhaustive: mode == SubsetMode::Exhaustive,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::base_p_family;
    use crate::zp::PrimeModulus;

    fn cert(p: u32, n: u64, r: usize) -> ColoringCertificate {
        let f = base_p_family(PrimeModulus::new(p).unwrap(), n).unwrap();
        family_to_colorings(&f, r).unwrap()
    }

    #[test]
    fn base_p_certificate() {
        let c = cert(3, 9, 9);
        assert_eq!((c.p, c.r, c.q), (3, 9, 6));
        assert!(verify_certificate(&c).valid);
        assert!(verify_certificate(&cert(3, 9, 1)).valid);
        assert!(verify_certificate(&cert(5, 25, 25)).valid);
    }

    #[test]
    fn rejects_bad_sources() {
        let p = PrimeModulus::new(3).unwrap();
        let f = CoveringFamily::from_rows(p, &[[0u32, 1], [1, 2], [2, 0]]).unwrap();
        assert!(matches!(family_to_colorings(&f, 2), Err(Error::Verification { .. })));
        let g = base_p_family(p, 9).unwrap();
        assert!(family_to_colorings(&g, 10).is_err());
        assert!(family_to_colorings(&g, 0).is_err());
    }

    #[test]
    fn single_mutations_are_caught() {
        let c = cert(3, 9, 4);
        for k in 0..c.q {
            for e in 0..c.elements() {
                for color in 0..c.p {
                    if color == c.colorings[k][e] {
                        continue;
                    }
                    let mut bad = c.clone();
                    bad.colorings[k][e] = color;
                    let check = verify_certificate(&bad);
                    assert!(!check.valid && check.witness.is_some());
                }
            }
        }
    }

    #[test]
    fn unshared_witness_is_named() {
        // One proper coloring; (0,0) and (1,0) get colors 0 and 1.
        let c = ColoringCertificate {
            p: 3,
            r: 2,
            q: 1,
            colorings: vec![vec![0, 1, 2, 1, 2, 0]],
        };
        assert_eq!(
            verify_certificate(&c).witness,
            Some(CertificateFailure::Unshared { a: (0, 0), b: (1, 0) })
        );
    }

    #[test]
    fn export_shapes() {
        let c = cert(3, 9, 2);
        let m = export_partition_matroids(&c).unwrap();
        assert_eq!(m.elements, 6);
        for part in &m.partitions {
            for color in 0..3 {
                assert_eq!(part.iter().filter(|&&x| x == color).count(), 2);
            }
        }
        assert_eq!(m.to_certificate(), c);
        let single = export_partition_matroids(&cert(3, 9, 1)).unwrap();
        for part in &single.partitions {
            let mut sorted = part.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![0, 1, 2]);
        }
        let mut bad = c.clone();
        bad.colorings[0][0] = bad.colorings[0][1];
        assert!(export_partition_matroids(&bad).is_err());
    }

    #[test]
    fn intersection_equals_cliques() {
        let m = export_partition_matroids(&cert(3, 9, 2)).unwrap();
        let check = verify_matroid_intersection_equals_cliques(&m, SubsetMode::Exhaustive).unwrap();
        assert!(check.holds);
        assert_eq!(check.subsets_checked, 64);
        assert!(!m.is_common_independent(&[0, 3]) || !m.is_common_independent(&[0, 4]));
        let big = export_partition_matroids(&cert(3, 9, 9)).unwrap();
        assert!(verify_matroid_intersection_equals_cliques(&big, SubsetMode::Exhaustive).is_err());
        let sampled = verify_matroid_intersection_equals_cliques(
            &big,
            SubsetMode::Sampled {
                samples: 500,
                seed: 1,
            },
        )
        .unwrap();
        assert!(sampled.holds);
    }
}
