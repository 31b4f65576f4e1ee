//! Noncommutative polynomials in `t_1, ..., t_n` over the rationals.
//!
//! Free difference quotients `d_j` map into `P (x) P^op`, cyclic derivatives
//! `D_j` back into `P`. Tensors multiply as `(a (x) b)(c (x) d) = ac (x) bd` and
//! act on polynomials by `(a (x) b) # c = a c b`; matrices of tensors compose with
//! `(a (x) b) # (c (x) d) = ac (x) db`. Semicircular moments follow the
//! non-crossing pairing rule, enumerated by pairing the first letter.

use crate::{add_to, AlgebraError, Q};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Monomial as a sequence of variable indices in `1..=arity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn letter(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Word {
        Word(self.0[range].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|i| format!("x{i}")).collect();
        write!(f, "{}", parts.join("*"))
    }
}

fn check_index(j: usize, arity: usize) -> Result<(), AlgebraError> {
    if j == 0 || j > arity {
        Err(AlgebraError::IndexOutOfArity { index: j, arity })
    } else {
        Ok(())
    }
}

fn check_arity(expected: usize, found: usize) -> Result<(), AlgebraError> {
    if expected == found {
        Ok(())
    } else {
        Err(AlgebraError::ArityMismatch { expected, found })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NCPoly {
    arity: usize,
    terms: BTreeMap<Word, Q>,
}

impl NCPoly {
    pub fn zero(arity: usize) -> Self {
        Self { arity, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: Q) -> Self {
        Self::from_terms(arity, [(Word::empty(), c)]).expect("empty word fits any arity")
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, Q::one())
    }

    pub fn var(arity: usize, i: usize) -> Result<Self, AlgebraError> {
        Self::from_terms(arity, [(Word::letter(i), Q::one())])
    }

    pub fn monomial(arity: usize, w: Word) -> Result<Self, AlgebraError> {
        Self::from_terms(arity, [(w, Q::one())])
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Word, Q)>) -> Result<Self, AlgebraError> {
        let mut p = Self::zero(arity);
        for (w, c) in terms {
            for &i in &w.0 {
                check_index(i, arity)?;
            }
            add_to(&mut p.terms, w, c);
        }
        Ok(p)
    }

    fn unchecked(arity: usize, terms: impl IntoIterator<Item = (Word, Q)>) -> Self {
        let mut p = Self::zero(arity);
        for (w, c) in terms {
            add_to(&mut p.terms, w, c);
        }
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &Word) -> Q {
        self.terms.get(w).cloned().unwrap_or_else(Q::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Word::empty())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.arity = self.arity.max(other.arity);
        for (w, c) in &other.terms {
            add_to(&mut out.terms, w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::unchecked(self.arity, self.terms.iter().map(|(w, c)| (w.clone(), c * s)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.arity.max(other.arity));
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                add_to(&mut out.terms, a.concat(b), x * y);
            }
        }
        out
    }

    /// Terms of degree at most `d`.
    pub fn truncate(&self, d: usize) -> Self {
        Self::unchecked(self.arity, self.terms.iter().filter(|(w, _)| w.len() <= d).map(|(w, c)| (w.clone(), c.clone())))
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            if w.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{w}")?;
            } else {
                write!(f, "{a}*{w}")?;
            }
        }
        Ok(())
    }
}

/// Element of `P (x) P^op`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NCTensor {
    arity: usize,
    terms: BTreeMap<(Word, Word), Q>,
}

impl NCTensor {
    pub fn zero(arity: usize) -> Self {
        Self { arity, terms: BTreeMap::new() }
    }

    /// `c (1 (x) 1)`.
    pub fn unit(arity: usize, c: Q) -> Self {
        Self::from_terms(arity, [((Word::empty(), Word::empty()), c)])
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = ((Word, Word), Q)>) -> Self {
        let mut t = Self::zero(arity);
        for (k, c) in terms {
            add_to(&mut t.terms, k, c);
        }
        t
    }

    /// `p (x) q`.
    pub fn simple(p: &NCPoly, q: &NCPoly) -> Self {
        let mut t = Self::zero(p.arity.max(q.arity));
        for (a, x) in &p.terms {
            for (b, y) in &q.terms {
                add_to(&mut t.terms, (a.clone(), b.clone()), x * y);
            }
        }
        t
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, Word), &Q)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.arity = self.arity.max(other.arity);
        for (k, c) in &other.terms {
            add_to(&mut out.terms, k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::from_terms(self.arity, self.terms.iter().map(|(k, c)| (k.clone(), c * s))).with_arity(self.arity)
    }

    fn with_arity(mut self, arity: usize) -> Self {
        self.arity = arity;
        self
    }

    /// `(a (x) b)(c (x) d) = ac (x) bd`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.arity.max(other.arity));
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &other.terms {
                add_to(&mut out.terms, (a.concat(c), b.concat(d)), x * y);
            }
        }
        out
    }

    /// `(a (x) b) # (c (x) d) = ac (x) db`.
    pub fn sharp_tensor(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.arity.max(other.arity));
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &other.terms {
                add_to(&mut out.terms, (a.concat(c), d.concat(b)), x * y);
            }
        }
        out
    }

    /// `a (x) b -> b (x) a`.
    pub fn flip(&self) -> Self {
        Self::from_terms(self.arity, self.terms.iter().map(|((a, b), c)| ((b.clone(), a.clone()), c.clone())))
            .with_arity(self.arity)
    }

    /// `a (x) b -> ab`.
    pub fn multiply(&self) -> NCPoly {
        NCPoly::unchecked(self.arity, self.terms.iter().map(|((a, b), c)| (a.concat(b), c.clone())))
    }

    /// Substitution in both legs.
    pub fn substitute(&self, q: &[NCPoly]) -> Result<Self, AlgebraError> {
        let arity = q.first().map_or(self.arity, |p| p.arity);
        let mut out = Self::zero(arity);
        for ((a, b), c) in &self.terms {
            let pa = substitute(&NCPoly::unchecked(self.arity, [(a.clone(), Q::one())]), q)?;
            let pb = substitute(&NCPoly::unchecked(self.arity, [(b.clone(), Q::one())]), q)?;
            out = out.add(&NCTensor::simple(&pa, &pb).scale(c));
        }
        Ok(out.with_arity(arity))
    }
}

impl fmt::Display for NCTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|((a, b), c)| format!("{c}*({a} (x) {b})")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Element of `P (x) P (x) P`, the target of iterated difference quotients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NCTriple {
    terms: BTreeMap<(Word, Word, Word), Q>,
}

impl NCTriple {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// `d_j m = sum_{m = a t_j b} a (x) b`.
pub fn partial(p: &NCPoly, j: usize) -> Result<NCTensor, AlgebraError> {
    check_index(j, p.arity)?;
    let mut out = NCTensor::zero(p.arity);
    for (w, c) in &p.terms {
        for (k, &letter) in w.0.iter().enumerate() {
            if letter == j {
                add_to(&mut out.terms, (w.slice(0..k), w.slice(k + 1..w.len())), c.clone());
            }
        }
    }
    Ok(out)
}

/// `(d_i (x) id) T`.
pub fn partial_left(t: &NCTensor, i: usize) -> Result<NCTriple, AlgebraError> {
    check_index(i, t.arity)?;
    let mut out = NCTriple::default();
    for ((a, b), c) in &t.terms {
        for (k, &letter) in a.0.iter().enumerate() {
            if letter == i {
                add_to(&mut out.terms, (a.slice(0..k), a.slice(k + 1..a.len()), b.clone()), c.clone());
            }
        }
    }
    Ok(out)
}

/// `(id (x) d_j) T`.
pub fn partial_right(t: &NCTensor, j: usize) -> Result<NCTriple, AlgebraError> {
    check_index(j, t.arity)?;
    let mut out = NCTriple::default();
    for ((a, b), c) in &t.terms {
        for (k, &letter) in b.0.iter().enumerate() {
            if letter == j {
                add_to(&mut out.terms, (a.clone(), b.slice(0..k), b.slice(k + 1..b.len())), c.clone());
            }
        }
    }
    Ok(out)
}

/// `D_j m = sum_{m = a t_j b} b a`.
pub fn cyclic(p: &NCPoly, j: usize) -> Result<NCPoly, AlgebraError> {
    check_index(j, p.arity)?;
    let mut out = NCPoly::zero(p.arity);
    for (w, c) in &p.terms {
        for (k, &letter) in w.0.iter().enumerate() {
            if letter == j {
                add_to(&mut out.terms, w.slice(k + 1..w.len()).concat(&w.slice(0..k)), c.clone());
            }
        }
    }
    Ok(out)
}

/// Square matrix of tensors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NCMatrix {
    n: usize,
    entries: Vec<NCTensor>,
}

impl NCMatrix {
    pub fn new(n: usize, entries: Vec<NCTensor>) -> Result<Self, AlgebraError> {
        check_arity(n * n, entries.len())?;
        Ok(Self { n, entries })
    }

    /// `K (1 (x) 1)` entrywise.
    pub fn from_scalars(k: &CovarianceMatrix, arity: usize) -> Self {
        let n = k.dim();
        let entries = (0..n * n).map(|idx| NCTensor::unit(arity, k.get(idx / n, idx % n).clone())).collect();
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &NCTensor {
        &self.entries[i * self.n + j]
    }

    /// `(A # B)_{ik} = sum_j A_{ij} # B_{jk}`.
    pub fn sharp(&self, other: &Self) -> Result<Self, AlgebraError> {
        check_arity(self.n, other.n)?;
        let n = self.n;
        let arity = self.entries.first().map_or(0, |t| t.arity);
        let entries = (0..n * n)
            .map(|idx| {
                let (i, k) = (idx / n, idx % n);
                (0..n).fold(NCTensor::zero(arity), |acc, j| acc.add(&self.get(i, j).sharp_tensor(other.get(j, k))))
            })
            .collect();
        Ok(Self { n, entries })
    }

    pub fn substitute(&self, q: &[NCPoly]) -> Result<Self, AlgebraError> {
        let entries = self.entries.iter().map(|t| t.substitute(q)).collect::<Result<_, _>>()?;
        Ok(Self { n: self.n, entries })
    }
}

/// `(J P)_{ij} = d_j P_i`.
pub fn jacobian(p: &[NCPoly]) -> Result<NCMatrix, AlgebraError> {
    let n = p.len();
    let mut entries = Vec::with_capacity(n * n);
    for pi in p {
        check_arity(n, pi.arity)?;
        for j in 1..=n {
            entries.push(partial(pi, j)?);
        }
    }
    NCMatrix::new(n, entries)
}

/// Multiplies each monomial by its degree.
pub fn number_op(p: &NCPoly) -> NCPoly {
    NCPoly::unchecked(p.arity, p.terms.iter().map(|(w, c)| (w.clone(), c * Q::from_integer((w.len() as i64).into()))))
}

/// Average over cyclic rotations of each monomial.
pub fn symmetrize(p: &NCPoly) -> Result<NCPoly, AlgebraError> {
    if !p.constant_term().is_zero() {
        return Err(AlgebraError::ConstantTermInSymmetrize);
    }
    let mut out = NCPoly::zero(p.arity);
    for (w, c) in &p.terms {
        let len = w.len();
        let share = c / Q::from_integer((len as i64).into());
        for r in 0..len {
            add_to(&mut out.terms, w.slice(r..len).concat(&w.slice(0..r)), share.clone());
        }
    }
    Ok(out)
}

/// `(a (x) b) # q = a q b`.
pub fn sharp(t: &NCTensor, q: &NCPoly) -> NCPoly {
    let mut out = NCPoly::zero(t.arity.max(q.arity));
    for ((a, b), x) in &t.terms {
        for (w, y) in &q.terms {
            add_to(&mut out.terms, a.concat(w).concat(b), x * y);
        }
    }
    out
}

/// Homomorphic substitution `t_i -> q_i`.
pub fn substitute(p: &NCPoly, q: &[NCPoly]) -> Result<NCPoly, AlgebraError> {
    check_arity(p.arity, q.len())?;
    let arity = q.first().map_or(p.arity, |x| x.arity);
    let mut out = NCPoly::zero(arity);
    for (w, c) in &p.terms {
        let mut acc = NCPoly::constant(arity, c.clone());
        for &i in &w.0 {
            acc = acc.mul(&q[i - 1]);
        }
        out = out.add(&acc);
    }
    out.arity = arity;
    Ok(out)
}

/// `sum_q |lambda_q| R^{deg q}`.
pub fn norm_r(p: &NCPoly, r: &Q) -> Result<Q, AlgebraError> {
    if !r.is_positive() {
        return Err(AlgebraError::InvalidArgument(format!("norm radius {r} must be positive")));
    }
    Ok(p.terms.iter().fold(Q::zero(), |acc, (w, c)| acc + c.abs() * num::pow(r.clone(), w.len())))
}

/// Symmetric positive-definite rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovarianceMatrix {
    n: usize,
    data: Vec<Q>,
}

impl CovarianceMatrix {
    #[allow(clippy::needless_range_loop)]
    pub fn new(rows: Vec<Vec<Q>>) -> Result<Self, AlgebraError> {
        let n = rows.len();
        if n == 0 {
            return Err(AlgebraError::InvalidArgument("covariance matrix is empty".into()));
        }
        for r in &rows {
            check_arity(n, r.len())?;
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(AlgebraError::InvalidArgument(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let m = Self { n, data: rows.into_iter().flatten().collect() };
        m.ldl_pivots()?;
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let data = (0..n * n).map(|k| if k / n == k % n { Q::one() } else { Q::zero() }).collect();
        Self { n, data }
    }

    pub fn diagonal(d: &[Q]) -> Result<Self, AlgebraError> {
        let n = d.len();
        let rows = (0..n).map(|i| (0..n).map(|j| if i == j { d[i].clone() } else { Q::zero() }).collect()).collect();
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.n + j]
    }

    /// Pivots of the exact `L D L^T` factorization; all must be positive.
    fn ldl_pivots(&self) -> Result<Vec<Q>, AlgebraError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let p = a[k * n + k].clone();
            if !p.is_positive() {
                return Err(AlgebraError::NotPositiveDefinite { row: k, pivot: p.to_string() });
            }
            for i in k + 1..n {
                let f = &a[i * n + k] / &p;
                for j in k..n {
                    let v = &f * &a[k * n + j];
                    a[i * n + j] -= v;
                }
            }
            pivots.push(p);
        }
        Ok(pivots)
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Self {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for k in 0..n {
            // positive definite: the diagonal pivot never vanishes
            let p = a[k * n + k].clone();
            for j in 0..n {
                a[k * n + j] /= &p;
                inv[k * n + j] /= &p;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[i * n + k].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let (va, vi) = (&f * &a[k * n + j], &f * &inv[k * n + j]);
                    a[i * n + j] -= va;
                    inv[i * n + j] -= vi;
                }
            }
        }
        Self { n, data: inv }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let data = (0..n * n)
            .map(|idx| (0..n).fold(Q::zero(), |acc, k| acc + self.get(idx / n, k) * other.get(k, idx % n)))
            .collect();
        Self { n, data }
    }

    pub fn rows(&self) -> Vec<Vec<Q>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

/// Moments of a semicircular family with covariance `C`.
pub struct WickOracle<'a> {
    cov: &'a CovarianceMatrix,
}

impl<'a> WickOracle<'a> {
    pub fn new(cov: &'a CovarianceMatrix) -> Self {
        Self { cov }
    }

    /// Sum over non-crossing pairings of the product of covariances.
    pub fn moment(&self, w: &Word) -> Q {
        if w.len() % 2 == 1 {
            return Q::zero();
        }
        let mut memo = HashMap::new();
        self.segment(&w.0, 0, w.len(), &mut memo)
    }

    fn segment(&self, w: &[usize], i: usize, j: usize, memo: &mut HashMap<(usize, usize), Q>) -> Q {
        if i == j {
            return Q::one();
        }
        if (j - i) % 2 == 1 {
            return Q::zero();
        }
        if let Some(v) = memo.get(&(i, j)) {
            return v.clone();
        }
        let mut total = Q::zero();
        // the first letter pairs with position k; inside and outside pair separately
        for k in (i + 1..j).step_by(2) {
            let c = self.cov.get(w[i] - 1, w[k] - 1);
            if c.is_zero() {
                continue;
            }
            let inner = self.segment(w, i + 1, k, memo);
            if inner.is_zero() {
                continue;
            }
            total += c * inner * self.segment(w, k + 1, j, memo);
        }
        memo.insert((i, j), total.clone());
        total
    }

    pub fn trace(&self, p: &NCPoly) -> Q {
        p.terms.iter().fold(Q::zero(), |acc, (w, c)| acc + c * self.moment(w))
    }

    /// `(tau (x) tau)(T)`, each leg traced separately.
    pub fn trace2(&self, t: &NCTensor) -> Q {
        t.terms.iter().fold(Q::zero(), |acc, ((a, b), c)| acc + c * self.moment(a) * self.moment(b))
    }
}

pub fn semicircular_moment(c: &CovarianceMatrix, w: &Word) -> Result<Q, AlgebraError> {
    for &i in &w.0 {
        check_index(i, c.dim())?;
    }
    Ok(WickOracle::new(c).moment(w))
}

/// `max_i |tau(S_i P_i) - (tau (x) tau)(d_i P_i)|` for a standard semicircular family.
pub fn sd_residual_nc(p: &[NCPoly], max_checked_degree: usize) -> Result<Q, AlgebraError> {
    let n = p.len();
    let id = CovarianceMatrix::identity(n);
    let tau = WickOracle::new(&id);
    let mut worst = Q::zero();
    for (i, pi) in p.iter().enumerate() {
        check_arity(n, pi.arity)?;
        let pi = pi.truncate(max_checked_degree);
        let lhs = tau.trace(&NCPoly::var(n, i + 1)?.mul(&pi));
        let rhs = tau.trace2(&partial(&pi, i + 1)?);
        let r = (lhs - rhs).abs();
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

/// Every word of length at most `d` over `arity` letters.
pub fn all_words(arity: usize, d: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..d {
        let next: Vec<Word> = layer
            .iter()
            .flat_map(|w| (1..=arity).map(move |i| w.concat(&Word::letter(i))))
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSteinReport {
    /// `D U = K t` for `U = <t, K t> / 2`.
    pub cyclic_gradient_matches: bool,
    /// `J D U = K (1 (x) 1)`.
    pub jacobian_matches: bool,
    /// Schwinger-Dyson residual of the Gibbs law of `U`, a semicircular family with covariance `K^{-1}`.
    pub gibbs_sd_residual: Q,
    /// Stein identity residual for `X` with covariance `K` and kernel `A = K (1 (x) 1)`.
    pub stein_residual: Q,
    pub monomials_checked: usize,
}

impl QuadraticSteinReport {
    pub fn pass(&self) -> bool {
        self.cyclic_gradient_matches && self.jacobian_matches && self.gibbs_sd_residual.is_zero() && self.stein_residual.is_zero()
    }
}

pub fn quadratic_potential(k: &CovarianceMatrix) -> NCPoly {
    let n = k.dim();
    let half = Q::new(1.into(), 2.into());
    let mut u = NCPoly::zero(n);
    for i in 0..n {
        for j in 0..n {
            add_to(&mut u.terms, Word(vec![i + 1, j + 1]), &half * k.get(i, j));
        }
    }
    u
}

/// `t -> M t` as a tuple of linear polynomials.
fn linear_map(m: &CovarianceMatrix) -> Vec<NCPoly> {
    let n = m.dim();
    (0..n)
        .map(|i| NCPoly::unchecked(n, (0..n).map(|j| (Word::letter(j + 1), m.get(i, j).clone()))))
        .collect()
}

pub fn quadratic_stein_check(k: &CovarianceMatrix, max_degree: usize) -> Result<QuadraticSteinReport, AlgebraError> {
    let n = k.dim();
    let u = quadratic_potential(k);
    let du: Vec<NCPoly> = (1..=n).map(|l| cyclic(&u, l)).collect::<Result<_, _>>()?;
    let kt = linear_map(k);
    let cyclic_gradient_matches = du == kt;
    let jacobian_matches = jacobian(&du)? == NCMatrix::from_scalars(k, n);
    let kinv = k.inverse();
    let gibbs = WickOracle::new(&kinv);
    let law = WickOracle::new(k);
    let words = all_words(n, max_degree);
    let mut gibbs_sd_residual = Q::zero();
    let mut stein_residual = Q::zero();
    for w in &words {
        let p = NCPoly::unchecked(n, [(w.clone(), Q::one())]);
        let partials: Vec<NCTensor> = (1..=n).map(|j| partial(&p, j)).collect::<Result<_, _>>()?;
        for i in 0..n {
            let lhs = gibbs.trace(&du[i].mul(&p));
            let rhs = gibbs.trace2(&partials[i]);
            gibbs_sd_residual = gibbs_sd_residual.max((lhs - rhs).abs());
            let lhs = law.trace(&NCPoly::unchecked(n, [(Word::letter(i + 1), Q::one())]).mul(&p));
            let rhs = (0..n).fold(Q::zero(), |acc, j| acc + k.get(i, j) * law.trace2(&partials[j]));
            stein_residual = stein_residual.max((lhs - rhs).abs());
        }
    }
    Ok(QuadraticSteinReport {
        cyclic_gradient_matches,
        jacobian_matches,
        gibbs_sd_residual,
        stein_residual,
        monomials_checked: words.len(),
    })
}

/// Coefficients `[z^0..z^len)` of `M(z)^s` for `M(z) = sum_k m_k z^k`, `m_0 = 1`.
fn series_power(m: &[Q], s: usize, len: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); len];
    if len == 0 {
        return out;
    }
    out[0] = Q::one();
    for _ in 0..s {
        let mut next = vec![Q::zero(); len];
        for (i, a) in out.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in m.iter().enumerate().take(len - i) {
                next[i + j] += a * b;
            }
        }
        out = next;
    }
    out
}

/// Moments `m_1..m_N` from free cumulants `k_1..k_N`, by the first-block recursion.
pub fn cumulants_to_moments(kappa: &[Q]) -> Vec<Q> {
    let n = kappa.len();
    let mut m = vec![Q::one()];
    for order in 1..=n {
        let mut total = Q::zero();
        for s in 1..=order {
            let power = series_power(&m, s, order - s + 1);
            total += &kappa[s - 1] * &power[order - s];
        }
        m.push(total);
    }
    m.split_off(1)
}

/// Free cumulants `k_1..k_N` from moments `m_1..m_N`, inverting the same recursion.
pub fn moments_to_cumulants(moments: &[Q]) -> Vec<Q> {
    let n = moments.len();
    let mut m = vec![Q::one()];
    m.extend_from_slice(moments);
    let mut kappa: Vec<Q> = Vec::with_capacity(n);
    for order in 1..=n {
        let mut rest = Q::zero();
        for s in 1..order {
            let power = series_power(&m[..order], s, order - s + 1);
            rest += &kappa[s - 1] * &power[order - s];
        }
        kappa.push(&m[order] - rest);
    }
    kappa
}

/// Moments of `D_c mu` from those of `mu`: `m_k c^k`.
pub fn dilate_moments(moments: &[Q], c: &Q) -> Vec<Q> {
    moments.iter().enumerate().map(|(k, m)| m * num::pow(c.clone(), k + 1)).collect()
}

/// Moments of `D_{1/sqrt n}(mu^{⊞n})` computed at the moment level; odd moments of
/// `mu^{⊞n}` must vanish unless `n` is a perfect square.
pub fn normalized_sum_moments(moments: &[Q], n: u32) -> Result<Vec<Q>, AlgebraError> {
    if n == 0 {
        return Err(AlgebraError::InvalidArgument("number of summands must be positive".into()));
    }
    let kappa = moments_to_cumulants(moments);
    let factor = Q::from_integer(n.into());
    let summed = cumulants_to_moments(&kappa.iter().map(|k| k * &factor).collect::<Vec<_>>());
    let root = (n as f64).sqrt().round() as u32;
    let square = root * root == n;
    summed
        .iter()
        .enumerate()
        .map(|(idx, m)| {
            let k = idx + 1;
            if k % 2 == 0 {
                Ok(m / num::pow(factor.clone(), k / 2))
            } else if m.is_zero() {
                Ok(Q::zero())
            } else if square {
                Ok(m / num::pow(Q::from_integer(root.into()), k))
            } else {
                Err(AlgebraError::InvalidArgument(format!(
                    "odd moment m_{k} is nonzero and {n} is not a perfect square"
                )))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn w(letters: &[usize]) -> Word {
        Word(letters.to_vec())
    }

    #[test]
    fn partial_of_t1t2t1() {
        let p = NCPoly::monomial(2, w(&[1, 2, 1])).unwrap();
        let d = partial(&p, 1).unwrap();
        let expected = NCTensor::from_terms(2, [((w(&[]), w(&[2, 1])), q(1)), ((w(&[1, 2]), w(&[])), q(1))]);
        assert_eq!(d, expected);
        assert!(partial(&NCPoly::var(2, 2).unwrap(), 1).unwrap().is_zero());
        assert_eq!(cyclic(&p, 1).unwrap(), NCPoly::from_terms(2, [(w(&[2, 1]), q(1)), (w(&[1, 2]), q(1))]).unwrap());
    }

    #[test]
    fn wick_moments() {
        let id = CovarianceMatrix::identity(2);
        assert_eq!(semicircular_moment(&id, &w(&[1, 1, 1, 1])).unwrap(), q(2));
        assert_eq!(semicircular_moment(&id, &w(&[1, 2, 1, 2])).unwrap(), q(0));
        assert_eq!(semicircular_moment(&id, &w(&[1, 2, 2, 1])).unwrap(), q(1));
        assert_eq!(semicircular_moment(&id, &w(&[1; 12])).unwrap(), q(132));
    }

    #[test]
    fn catalan_from_cumulants() {
        let mut kappa = vec![q(0); 8];
        kappa[1] = q(1);
        let m = cumulants_to_moments(&kappa);
        assert_eq!(m, vec![q(0), q(1), q(0), q(2), q(0), q(5), q(0), q(14)]);
        assert_eq!(moments_to_cumulants(&m), kappa);
        let poisson = cumulants_to_moments(&vec![q(1); 5]);
        assert_eq!(poisson, vec![q(1), q(2), q(5), q(14), q(42)]);
    }

    #[test]
    fn norms() {
        let p = NCPoly::from_terms(2, [(w(&[1, 2]), q(1)), (w(&[1]), q(3))]).unwrap();
        assert_eq!(norm_r(&p, &q(2)).unwrap(), q(10));
    }

    #[test]
    fn quadratic_stein_diag() {
        let k = CovarianceMatrix::diagonal(&[q(2), q(1)]).unwrap();
        let r = quadratic_stein_check(&k, 4).unwrap();
        assert!(r.pass(), "{r:?}");
        assert_eq!(semicircular_moment(&k, &w(&[1, 1])).unwrap(), q(2));
    }
}
