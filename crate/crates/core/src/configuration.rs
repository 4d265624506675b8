use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{hexfloat, Error, Result, Window};

/// A finite multiset of points in `R^d`.
///
/// Atoms are stored contiguously in insertion order; the order carries no
/// meaning. Equality ([`Configuration::multiset_eq`]) compares coordinates
/// bit-exactly after sorting, so `0.0` and `-0.0` are different atoms.
///
/// An empty configuration built without a dimension (for instance parsed from
/// `[]`) has dimension 0 and is compatible with every dimension.
#[derive(Debug, Clone, Default)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn empty(dim: usize) -> Self {
        Configuration {
            dim,
            coords: Vec::new(),
        }
    }

    /// Builds a configuration from flat coordinates, `dim` values per atom.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 && !coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if dim > 0 && coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate {
                atom: pos / dim,
                value: coords[pos],
            });
        }
        Ok(Configuration { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Configuration::from_flat(dim, coords)
    }

    /// One-dimensional configuration from scalar atoms.
    pub fn from_scalars(atoms: &[f64]) -> Result<Self> {
        Configuration::from_flat(1, atoms.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms, `omega(Lambda)`.
    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let dim = self.dim.max(1);
        self.coords.chunks_exact(dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn push_unchecked(&mut self, x: &[f64]) {
        if self.dim == 0 {
            self.dim = x.len();
        }
        debug_assert_eq!(x.len(), self.dim);
        self.coords.extend_from_slice(x);
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if self.dim != 0 && x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate {
                atom: self.len(),
                value: *v,
            });
        }
        self.push_unchecked(x);
        Ok(())
    }

    /// `omega + epsilon_x`.
    pub fn with_atom(&self, x: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.push(x)?;
        Ok(out)
    }

    /// Superposition `omega + eta`.
    pub fn superpose(&self, other: &Configuration) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        if out.dim == 0 {
            out.dim = other.dim;
        }
        out.coords.extend_from_slice(&other.coords);
        Ok(out)
    }

    /// Restriction `pi_K omega` to the atoms inside `window`.
    pub fn restrict(&self, window: &Window) -> Self {
        let mut out = Configuration::empty(self.dim);
        for x in self.atoms() {
            if window.contains(x) {
                out.push_unchecked(x);
            }
        }
        out
    }

    /// Number of atoms inside `window`, `omega(K)`.
    pub fn count_in(&self, window: &Window) -> usize {
        self.atoms().filter(|x| window.contains(x)).count()
    }

    pub fn is_inside(&self, window: &Window) -> bool {
        self.is_empty() || self.atoms().all(|x| window.contains(x))
    }

    pub(crate) fn check_compatible(&self, other: &Configuration) -> Result<()> {
        if self.dim != 0 && other.dim != 0 && self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    /// Atoms sorted lexicographically under `f64::total_cmp`.
    pub(crate) fn sorted_atoms(&self) -> Vec<&[f64]> {
        let mut atoms: Vec<&[f64]> = self.atoms().collect();
        atoms.sort_by(|a, b| lex_cmp(a, b));
        atoms
    }

    /// Multiset equality with bit-exact coordinates.
    pub fn multiset_eq(&self, other: &Configuration) -> bool {
        self.len() == other.len() && sym_diff_count(self, other) == 0
    }

    /// JSON array of coordinate arrays. With `hex`, coordinates are written
    /// as hexadecimal float strings.
    pub fn to_json(&self, hex: bool) -> String {
        if hex {
            let atoms: Vec<Vec<String>> = self
                .atoms()
                .map(|x| x.iter().map(|v| hexfloat::format(*v)).collect())
                .collect();
            serde_json::to_string(&atoms).expect("strings serialize")
        } else {
            serde_json::to_string(self).expect("finite floats serialize")
        }
    }

    /// Parses either decimal or hexadecimal-string coordinates.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.multiset_eq(other)
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// `(omega \ eta)(Lambda)`: atoms of `omega` not matched, with multiplicity,
/// by atoms of `eta`.
pub fn sym_diff_count(omega: &Configuration, eta: &Configuration) -> usize {
    let a = omega.sorted_atoms();
    let b = eta.sorted_atoms();
    let (mut i, mut j, mut unmatched) = (0, 0, 0);
    while i < a.len() {
        if j == b.len() {
            unmatched += a.len() - i;
            break;
        }
        match lex_cmp(a[i], b[j]) {
            Ordering::Less => {
                unmatched += 1;
                i += 1;
            }
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    unmatched
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for x in self.atoms() {
            seq.serialize_element(x)?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coord {
    Number(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct AtomsVisitor;

        impl<'de> Visitor<'de> for AtomsVisitor {
            type Value = Configuration;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of coordinate arrays")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Configuration, A::Error> {
                let mut out = Configuration::default();
                while let Some(atom) = seq.next_element::<Vec<Coord>>()? {
                    let coords = atom
                        .into_iter()
                        .map(|c| match c {
                            Coord::Number(v) => Ok(v),
                            Coord::Text(s) => hexfloat::parse(&s).map_err(de::Error::custom),
                        })
                        .collect::<std::result::Result<Vec<f64>, A::Error>>()?;
                    if coords.is_empty() {
                        return Err(de::Error::custom("atom with no coordinates"));
                    }
                    out.push(&coords).map_err(de::Error::custom)?;
                }
                Ok(out)
            }
        }

        deserializer.deserialize_seq(AtomsVisitor)
    }
}
