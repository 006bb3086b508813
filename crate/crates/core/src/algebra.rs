//! Finite-dimensional commutative associative algebras with unity.
//!
//! An algebra is stored by its structure constants `c[i][j][k]`, with
//! `b_i b_j = sum_k c[i][j][k] b_k`. Constants are kept twice: exactly, as
//! rationals (floats are converted through [`rationalize`]), and as `f64`.
//! Elements may use either coefficient type through [`Scalar`].

use std::fmt;
use std::ops::{Add, Sub};

use nalgebra::DMatrix;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rational::{
    self, format_rational, inertia, int, parse_rational, rationalize, Rational, Scalar,
};

/// Float tensors are validated to this tolerance (scaled by the largest constant).
pub const FLOAT_VALIDATION_TOL: f64 = 1e-12;

/// An element of an algebra, by coefficients in its fixed basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement<T = f64> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> AlgebraElement<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zero(dim: usize) -> Self {
        Self { coeffs: vec![T::zero(); dim] }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut e = Self::zero(dim);
        e.coeffs[i] = T::one();
        e
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn scale(&self, s: &T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn to_f64(&self) -> AlgebraElement<f64> {
        AlgebraElement { coeffs: self.coeffs.iter().map(Scalar::approx).collect() }
    }
}

impl<T: Scalar> Add for &AlgebraElement<T> {
    type Output = AlgebraElement<T>;
    fn add(self, o: Self) -> AlgebraElement<T> {
        AlgebraElement {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }
}

impl<T: Scalar> Sub for &AlgebraElement<T> {
    type Output = AlgebraElement<T>;
    fn sub(self, o: Self) -> AlgebraElement<T> {
        AlgebraElement {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }
}

/// Structure constants of a commutative associative unital algebra.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    dim: usize,
    exact: Vec<Rational>,
    approx: Vec<f64>,
    unit: Vec<Rational>,
    unit_index: Option<usize>,
    labels: Option<Vec<String>>,
    exact_input: bool,
    nil: NilradicalData,
}

/// The nilradical N of an algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct NilradicalData {
    pub basis: Vec<AlgebraElement<Rational>>,
    /// Dimensions of N, N^2, ..., ending with 0.
    pub power_dims: Vec<usize>,
    /// Least n with N^n = 0.
    pub nilpotency_class: usize,
}

/// Invariants separating the irreducible algebras of dimension at most 4.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsomorphismInvariants {
    pub dim: usize,
    pub nilpotency_class: usize,
    pub power_dims: Vec<usize>,
    /// `(rank, |signature|)` of the form N/N^2 x N/N^2 -> N^2, present when
    /// dim = 4 and the class is 3.
    pub form: Option<(usize, usize)>,
}

#[inline]
fn idx(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

impl StructureConstants {
    /// Builds an algebra from exact constants; `tensor[(i*n + j)*n + k] = c[i][j][k]`.
    pub fn from_rational(dim: usize, tensor: Vec<Rational>, unit_index: usize) -> Result<Self> {
        if unit_index >= dim {
            return Err(Error::InvalidAlgebra(format!("unit index {unit_index} out of range")));
        }
        let mut unit = vec![Rational::zero(); dim];
        unit[unit_index] = int(1);
        Self::build(dim, tensor, None, unit, Some(unit_index), true)
    }

    /// Builds an algebra from float constants, validated to [`FLOAT_VALIDATION_TOL`].
    pub fn from_f64(dim: usize, tensor: Vec<f64>, unit_index: usize) -> Result<Self> {
        if unit_index >= dim {
            return Err(Error::InvalidAlgebra(format!("unit index {unit_index} out of range")));
        }
        if tensor.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidAlgebra("non-finite structure constant".into()));
        }
        let exact = tensor.iter().map(|&x| rationalize(x)).collect();
        let mut unit = vec![Rational::zero(); dim];
        unit[unit_index] = int(1);
        Self::build(dim, exact, Some(tensor), unit, Some(unit_index), false)
    }

    fn build(
        dim: usize,
        exact: Vec<Rational>,
        approx: Option<Vec<f64>>,
        unit: Vec<Rational>,
        unit_index: Option<usize>,
        exact_input: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        check_dim(dim * dim * dim, exact.len())?;
        let approx = approx.unwrap_or_else(|| exact.iter().map(|r| r.to_f64().unwrap()).collect());
        let mut alg = Self {
            dim,
            exact,
            approx,
            unit,
            unit_index,
            labels: None,
            exact_input,
            nil: NilradicalData { basis: vec![], power_dims: vec![0], nilpotency_class: 1 },
        };
        if exact_input {
            alg.validate::<Rational>(0.0)?;
        } else {
            let scale = alg.approx.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            alg.validate::<f64>(FLOAT_VALIDATION_TOL * scale * scale)?;
        }
        alg.nil = alg.compute_nilradical();
        Ok(alg)
    }

    fn validate<T: Scalar>(&self, tol: f64) -> Result<()> {
        let n = self.dim;
        let c = |i, j, k| T::from_constant(&self.exact[idx(n, i, j, k)], self.approx[idx(n, i, j, k)]);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if !(c(i, j, k) - c(j, i, k)).negligible(tol) {
                        return Err(Error::InvalidAlgebra(format!(
                            "not commutative at (i,j,k)=({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut lhs = T::zero();
                        let mut rhs = T::zero();
                        for m in 0..n {
                            lhs = lhs + c(i, j, m) * c(m, k, l);
                            rhs = rhs + c(j, k, m) * c(i, m, l);
                        }
                        if !(lhs - rhs).negligible(tol) {
                            return Err(Error::InvalidAlgebra(format!(
                                "not associative at (i,j,k)=({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        let unit: AlgebraElement<T> = self.unit();
        for i in 0..n {
            let e = AlgebraElement::<T>::basis(n, i);
            let p = self.multiply(&unit, &e)?;
            if !(&p - &e).coeffs.iter().all(|x| x.negligible(tol)) {
                return Err(Error::InvalidAlgebra(format!("unit law fails on basis element {i}")));
            }
        }
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.dim, labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn unit_index(&self) -> Option<usize> {
        self.unit_index
    }

    /// Whether the constants were supplied exactly.
    pub fn is_exact(&self) -> bool {
        self.exact_input
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.approx[idx(self.dim, i, j, k)]
    }

    pub fn exact_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.exact[idx(self.dim, i, j, k)]
    }

    pub fn unit<T: Scalar>(&self) -> AlgebraElement<T> {
        AlgebraElement {
            coeffs: self.unit.iter().map(|u| T::from_constant(u, u.to_f64().unwrap())).collect(),
        }
    }

    fn c<T: Scalar>(&self, i: usize, j: usize, k: usize) -> T {
        let p = idx(self.dim, i, j, k);
        T::from_constant(&self.exact[p], self.approx[p])
    }

    pub fn multiply<T: Scalar>(&self, a: &AlgebraElement<T>, b: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        let n = self.dim;
        check_dim(n, a.dim())?;
        check_dim(n, b.dim())?;
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            if a.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b.coeffs[j].is_zero() {
                    continue;
                }
                let ab = a.coeffs[i].clone() * b.coeffs[j].clone();
                for (k, o) in out.iter_mut().enumerate() {
                    let c: T = self.c(i, j, k);
                    if !c.is_zero() {
                        *o = o.clone() + ab.clone() * c;
                    }
                }
            }
        }
        Ok(AlgebraElement { coeffs: out })
    }

    pub fn power<T: Scalar>(&self, a: &AlgebraElement<T>, k: usize) -> Result<AlgebraElement<T>> {
        let mut p = self.unit();
        for _ in 0..k {
            p = self.multiply(&p, a)?;
        }
        Ok(p)
    }

    /// Matrix of `x -> a x`: entry `(k, j)` is `sum_i a_i c[i][j][k]`.
    pub fn regular_representation<T: Scalar>(&self, a: &AlgebraElement<T>) -> Result<DMatrix<T>> {
        Ok(DMatrix::from_vec(self.dim, self.dim, self.rho_rows(a)?.into_iter().flatten().collect()).transpose())
    }

    fn rho_rows<T: Scalar>(&self, a: &AlgebraElement<T>) -> Result<Vec<Vec<T>>> {
        let n = self.dim;
        check_dim(n, a.dim())?;
        let mut m = vec![vec![T::zero(); n]; n];
        for (k, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for i in 0..n {
                    if !a.coeffs[i].is_zero() {
                        *e = e.clone() + a.coeffs[i].clone() * self.c(i, j, k);
                    }
                }
            }
        }
        Ok(m)
    }

    fn det_tolerance<T: Scalar>(rows: &[Vec<T>]) -> f64 {
        if T::EXACT {
            0.0
        } else {
            let s = rows.iter().flatten().fold(0.0f64, |m, x| m.max(x.magnitude()));
            1e-12 * s.powi(rows.len() as i32)
        }
    }

    /// True iff `det rho(a) != 0` (exact for rationals, relative tolerance 1e-12 for floats).
    pub fn is_unit<T: Scalar>(&self, a: &AlgebraElement<T>) -> Result<bool> {
        let rows = self.rho_rows(a)?;
        let tol = Self::det_tolerance(&rows);
        let d = rational::det(&rows, 0.0);
        Ok(!d.negligible(tol))
    }

    /// Multiplicative inverse. Irreducible algebras use the terminating
    /// Neumann series of `a = r 1 + x`; otherwise a linear solve.
    pub fn invert<T: Scalar>(&self, a: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        if !self.is_unit(a)? {
            return Err(Error::SingularElement);
        }
        let n = self.dim;
        if self.is_irreducible() {
            let rows = self.rho_rows(a)?;
            let mut tr = T::zero();
            for (i, row) in rows.iter().enumerate() {
                tr = tr + row[i].clone();
            }
            let r = tr / T::from_f64(n as f64);
            let x = a - &self.unit::<T>().scale(&r);
            let rinv = T::one() / r;
            let neg_rinv = -rinv.clone();
            let mut term = self.unit::<T>().scale(&rinv);
            let mut sum = term.clone();
            for _ in 1..self.nil.nilpotency_class {
                term = self.multiply(&term, &x)?.scale(&neg_rinv);
                sum = &sum + &term;
            }
            return Ok(sum);
        }
        let rows = self.rho_rows(a)?;
        let unit = self.unit::<T>().coeffs;
        rational::solve(&rows, &unit, 0.0).map(AlgebraElement::new).ok_or(Error::SingularElement)
    }

    /// The nilradical: kernel of the trace form `tr rho(b_i b_j)`.
    pub fn nilradical(&self) -> &NilradicalData {
        &self.nil
    }

    /// Whether the algebra is `R 1 + N` (local with residue field R).
    pub fn is_irreducible(&self) -> bool {
        self.nil.basis.len() + 1 == self.dim
    }

    fn compute_nilradical(&self) -> NilradicalData {
        let n = self.dim;
        let tau: Vec<Rational> = (0..n)
            .map(|k| (0..n).fold(Rational::zero(), |s, j| s + &self.exact[idx(n, k, j, j)]))
            .collect();
        let form: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(Rational::zero(), |s, k| s + &self.exact[idx(n, i, j, k)] * &tau[k]))
                    .collect()
            })
            .collect();
        let basis = rational::nullspace(&form, n, 0.0);
        let mut power_dims = vec![basis.len()];
        let mut current = basis.clone();
        while !current.is_empty() {
            let mut products = Vec::new();
            for x in &basis {
                for y in &current {
                    let p = self
                        .multiply(&AlgebraElement::new(x.clone()), &AlgebraElement::new(y.clone()))
                        .expect("dims agree");
                    products.push(p.coeffs);
                }
            }
            current = span_basis(products);
            power_dims.push(current.len());
            if power_dims.len() > n + 1 {
                break;
            }
        }
        let nilpotency_class = power_dims.iter().position(|&d| d == 0).unwrap_or(power_dims.len()) + 1;
        NilradicalData {
            basis: basis.into_iter().map(AlgebraElement::new).collect(),
            power_dims,
            nilpotency_class,
        }
    }

    fn power_bases(&self) -> Vec<Vec<Vec<Rational>>> {
        let basis: Vec<Vec<Rational>> = self.nil.basis.iter().map(|b| b.coeffs.clone()).collect();
        let mut layers = vec![basis.clone()];
        loop {
            let last = layers.last().unwrap();
            if last.is_empty() {
                break;
            }
            let mut products = Vec::new();
            for x in &basis {
                for y in last {
                    products.push(
                        self.multiply(&AlgebraElement::new(x.clone()), &AlgebraElement::new(y.clone()))
                            .unwrap()
                            .coeffs,
                    );
                }
            }
            layers.push(span_basis(products));
        }
        layers
    }

    fn require_irreducible(&self) -> Result<()> {
        if self.is_irreducible() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "algebra does not split as R 1 + nilpotents (dim {}, nilradical dim {})",
                self.dim,
                self.nil.basis.len()
            )))
        }
    }

    /// Basis `Y_1 = 1, Y_2, ..., Y_d` whose tail spans are ideals, refining
    /// `N > N^2 > ...`. Original basis vectors are preferred where possible.
    pub fn adapted_basis(&self) -> Result<Vec<AlgebraElement<Rational>>> {
        self.require_irreducible()?;
        let n = self.dim;
        let layers = self.power_bases();
        let mut chosen: Vec<Vec<Rational>> = vec![self.unit.clone()];
        for m in 0..layers.len() - 1 {
            let (upper, lower) = (&layers[m], &layers[m + 1]);
            let want = upper.len() - lower.len();
            let mut picked: Vec<Vec<Rational>> = Vec::new();
            let candidates = (0..n)
                .map(|i| {
                    let mut e = vec![Rational::zero(); n];
                    e[i] = int(1);
                    e
                })
                .chain(upper.iter().cloned());
            for cand in candidates {
                if picked.len() == want {
                    break;
                }
                if rational::solve_in_span(upper, &cand, 0.0).is_none() {
                    continue;
                }
                let mut span: Vec<Vec<Rational>> = lower.clone();
                span.extend(picked.iter().cloned());
                let before = rational::rank(&span, 0.0);
                span.push(cand.clone());
                if rational::rank(&span, 0.0) > before {
                    picked.push(cand);
                }
            }
            chosen.extend(picked);
        }
        Ok(chosen.into_iter().map(AlgebraElement::new).collect())
    }

    /// Re-expresses the algebra in a new basis (rows of `basis`, in old coordinates).
    pub fn in_basis(&self, basis: &[AlgebraElement<Rational>]) -> Result<Self> {
        let n = self.dim;
        check_dim(n, basis.len())?;
        let cols: Vec<Vec<Rational>> = basis.iter().map(|b| b.coeffs.clone()).collect();
        if rational::rank(&cols, 0.0) < n {
            return Err(Error::InvalidParameter("basis is not linearly independent".into()));
        }
        let coords = |v: &[Rational]| rational::solve_in_span(&cols, v, 0.0).expect("full rank basis");
        let mut tensor = vec![Rational::zero(); n * n * n];
        for i in 0..n {
            for j in 0..n {
                let p = self.multiply(&basis[i], &basis[j])?;
                for (k, x) in coords(&p.coeffs).into_iter().enumerate() {
                    tensor[idx(n, i, j, k)] = x;
                }
            }
        }
        let unit = coords(&self.unit);
        let unit_index = (0..n).find(|&i| unit.iter().enumerate().all(|(k, u)| *u == int((k == i) as i64)));
        let approx = (!self.exact_input).then(|| tensor.iter().map(|r| r.to_f64().unwrap()).collect());
        Self::build(n, tensor, approx, unit, unit_index, self.exact_input)
    }

    /// Invariants used for the classification in dimensions up to 4.
    pub fn isomorphism_invariants(&self) -> Result<IsomorphismInvariants> {
        self.require_irreducible()?;
        if self.dim > 4 {
            return Err(Error::Unsupported(format!("invariants need dim <= 4, got {}", self.dim)));
        }
        let form = if self.dim == 4 && self.nil.nilpotency_class == 3 {
            let layers = self.power_bases();
            let basis = self.adapted_basis()?;
            // basis = (1, u1, u2, g) with g spanning N^2
            let g = &layers[1][0];
            let pivot = g.iter().position(|x| !x.is_zero()).unwrap();
            let u = [&basis[1], &basis[2]];
            let mut m = vec![vec![Rational::zero(); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let p = self.multiply(u[i], u[j])?;
                    m[i][j] = &p.coeffs[pivot] / &g[pivot];
                }
            }
            let (pos, neg, _) = inertia(&m);
            Some((pos + neg, pos.abs_diff(neg)))
        } else {
            None
        };
        Ok(IsomorphismInvariants {
            dim: self.dim,
            nilpotency_class: self.nil.nilpotency_class,
            power_dims: self.nil.power_dims.clone(),
            form,
        })
    }

    /// Block direct sum; the unit is the sum of the summands' units.
    pub fn direct_sum(algs: &[StructureConstants]) -> Result<Self> {
        match algs {
            [] => Err(Error::InvalidParameter("direct sum of no algebras".into())),
            [single] => Ok(single.clone()),
            _ => {
                let n: usize = algs.iter().map(|a| a.dim).sum();
                let mut tensor = vec![Rational::zero(); n * n * n];
                let mut approx = vec![0.0; n * n * n];
                let mut unit = Vec::with_capacity(n);
                let mut labels = Vec::with_capacity(n);
                let mut off = 0;
                for (b, a) in algs.iter().enumerate() {
                    let m = a.dim;
                    for i in 0..m {
                        for j in 0..m {
                            for k in 0..m {
                                tensor[idx(n, off + i, off + j, off + k)] = a.exact[idx(m, i, j, k)].clone();
                                approx[idx(n, off + i, off + j, off + k)] = a.approx[idx(m, i, j, k)];
                            }
                        }
                        labels.push(match &a.labels {
                            Some(l) => format!("{}_{b}", l[i]),
                            None => format!("b{i}_{b}"),
                        });
                    }
                    unit.extend(a.unit.iter().cloned());
                    off += m;
                }
                let exact_input = algs.iter().all(|a| a.exact_input);
                let mut out = Self::build(n, tensor, (!exact_input).then_some(approx), unit, None, exact_input)?;
                out.labels = Some(labels);
                Ok(out)
            }
        }
    }

    /// The nilradical as a non-unital algebra, in adapted coordinates.
    pub fn nilpotent_part(&self) -> Result<NilpotentAlgebra> {
        let adapted = self.in_basis(&self.adapted_basis()?)?;
        let n = self.dim;
        let m = n - 1;
        let mut tensor = vec![Rational::zero(); m * m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    tensor[idx(m, i, j, k)] = adapted.exact[idx(n, i + 1, j + 1, k + 1)].clone();
                }
            }
        }
        NilpotentAlgebra::new(m, tensor)
    }

    pub fn reals() -> Self {
        Self::from_rational(1, vec![int(1)], 0).unwrap()
    }

    /// `R[X]/(X^d)` with basis `(1, X, ..., X^{d-1})`.
    pub fn truncated_polynomial(d: usize) -> Self {
        let mut t = vec![Rational::zero(); d * d * d];
        for i in 0..d {
            for j in 0..d {
                if i + j < d {
                    t[idx(d, i, j, i + j)] = int(1);
                }
            }
        }
        let labels = (0..d).map(|i| if i == 0 { "1".into() } else if i == 1 { "X".into() } else { format!("X^{i}") });
        Self::from_rational(d, t, 0).unwrap().with_labels(labels.collect()).unwrap()
    }

    /// `R 1 + N` with `N^2 = 0`, `dim N = d - 1`.
    pub fn square_zero_extension(d: usize) -> Self {
        NilpotentAlgebra::trivial(d - 1).unitization()
    }

    /// `R[X,Y]/(X^3, Y^2 - a X^2, XY)` with basis `(1, X, Y, X^2)`.
    pub fn class_three_quartic(a: Rational) -> Self {
        NilpotentAlgebra::class_three(a).unitization()
    }
}

fn span_basis(vectors: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let mut m = vectors;
    let piv = rational::rref(&mut m, 0.0);
    m.truncate(piv.len());
    m
}

impl fmt::Display for StructureConstants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "algebra of dim {} (nilpotency class {})", self.dim, self.nil.nilpotency_class)
    }
}

/// A commutative associative algebra without unit in which every element is nilpotent.
#[derive(Clone, Debug, PartialEq)]
pub struct NilpotentAlgebra {
    dim: usize,
    tensor: Vec<Rational>,
}

impl NilpotentAlgebra {
    pub fn new(dim: usize, tensor: Vec<Rational>) -> Result<Self> {
        check_dim(dim * dim * dim, tensor.len())?;
        let nil = Self { dim, tensor };
        // validated through the unitization
        let u = nil.try_unitization()?;
        if !u.is_irreducible() {
            return Err(Error::InvalidAlgebra("algebra is not nilpotent".into()));
        }
        Ok(nil)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.tensor[idx(self.dim, i, j, k)]
    }

    /// `dim`-dimensional algebra with all products zero.
    pub fn trivial(dim: usize) -> Self {
        Self { dim, tensor: vec![Rational::zero(); dim * dim * dim] }
    }

    /// `(X, ..., X^dim)` inside `R[X]/(X^{dim+1})`.
    pub fn truncated(dim: usize) -> Self {
        let mut t = vec![Rational::zero(); dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                if i + j + 1 < dim {
                    t[idx(dim, i, j, i + j + 1)] = int(1);
                }
            }
        }
        Self { dim, tensor: t }
    }

    /// `(X, Y, X^2)` with `X^2 = X^2`, `Y^2 = a X^2`, `XY = 0`.
    pub fn class_three(a: Rational) -> Self {
        let mut t = vec![Rational::zero(); 27];
        t[idx(3, 0, 0, 2)] = int(1);
        t[idx(3, 1, 1, 2)] = a;
        Self { dim: 3, tensor: t }
    }

    fn try_unitization(&self) -> Result<StructureConstants> {
        let m = self.dim;
        let n = m + 1;
        let mut t = vec![Rational::zero(); n * n * n];
        for i in 0..n {
            t[idx(n, 0, i, i)] = int(1);
            t[idx(n, i, 0, i)] = int(1);
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    t[idx(n, i + 1, j + 1, k + 1)] = self.tensor[idx(m, i, j, k)].clone();
                }
            }
        }
        StructureConstants::from_rational(n, t, 0)
    }

    /// `R 1 + N` with basis `(1, n_1, ..., n_m)`.
    pub fn unitization(&self) -> StructureConstants {
        self.try_unitization().expect("validated nilpotent algebra")
    }
}

/// JSON entry: a number or a `"p/q"` string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Text(String),
}

/// JSON form `{"dim", "unit_index", "tensor", "labels"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<Entry>>,
    pub tensor: Vec<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl TryFrom<AlgebraJson> for StructureConstants {
    type Error = Error;

    fn try_from(j: AlgebraJson) -> Result<Self> {
        let n = j.dim;
        let shape_err = || Error::Parse(format!("tensor must have shape {n}x{n}x{n}"));
        if j.tensor.len() != n || j.tensor.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(shape_err());
        }
        let flat: Vec<&Entry> = j.tensor.iter().flatten().flatten().collect();
        let exact_input = flat.iter().all(|e| match e {
            Entry::Text(_) => true,
            Entry::Number(x) => x.fract() == 0.0,
        });
        let mut exact = Vec::with_capacity(flat.len());
        let mut approx = Vec::with_capacity(flat.len());
        for e in flat {
            match e {
                Entry::Text(s) => {
                    let r = parse_rational(s)?;
                    approx.push(r.to_f64().unwrap());
                    exact.push(r);
                }
                Entry::Number(x) => {
                    approx.push(*x);
                    exact.push(rationalize(*x));
                }
            }
        }
        let (unit, unit_index) = match (j.unit_index, j.unit) {
            (Some(u), _) if u < n => {
                let mut v = vec![Rational::zero(); n];
                v[u] = int(1);
                (v, Some(u))
            }
            (Some(u), _) => return Err(Error::Parse(format!("unit_index {u} out of range"))),
            (None, Some(v)) => {
                check_dim(n, v.len())?;
                let v = v
                    .iter()
                    .map(|e| match e {
                        Entry::Text(s) => parse_rational(s),
                        Entry::Number(x) => Ok(rationalize(*x)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                (v, None)
            }
            (None, None) => return Err(Error::Parse("missing unit_index".into())),
        };
        let mut alg =
            StructureConstants::build(n, exact, (!exact_input).then_some(approx), unit, unit_index, exact_input)?;
        if let Some(l) = j.labels {
            alg = alg.with_labels(l)?;
        }
        Ok(alg)
    }
}

impl From<&StructureConstants> for AlgebraJson {
    fn from(a: &StructureConstants) -> Self {
        let n = a.dim;
        let entry = |p: usize| {
            if a.exact_input {
                let r = &a.exact[p];
                match r.is_integer() {
                    true => Entry::Number(r.to_f64().unwrap()),
                    false => Entry::Text(format_rational(r)),
                }
            } else {
                Entry::Number(a.approx[p])
            }
        };
        let tensor = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| entry(idx(n, i, j, k))).collect()).collect())
            .collect();
        AlgebraJson {
            dim: n,
            unit_index: a.unit_index,
            unit: a.unit_index.is_none().then(|| a.unit.iter().map(|r| Entry::Text(format_rational(r))).collect()),
            tensor,
            labels: a.labels.clone(),
        }
    }
}

impl StructureConstants {
    pub fn from_json(s: &str) -> Result<Self> {
        let j: AlgebraJson = serde_json::from_str(s)?;
        j.try_into()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(AlgebraJson::from(self)).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn e(c: &[f64]) -> AlgebraElement {
        AlgebraElement::new(c.to_vec())
    }

    fn q(c: &[i64]) -> AlgebraElement<Rational> {
        AlgebraElement::new(c.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn truncated_cubic_products() {
        let a = StructureConstants::truncated_polynomial(3);
        assert_eq!(a.multiply(&e(&[0., 1., 0.]), &e(&[0., 1., 0.])).unwrap(), e(&[0., 0., 1.]));
        assert_eq!(a.multiply(&e(&[0., 1., 0.]), &e(&[0., 0., 1.])).unwrap(), e(&[0., 0., 0.]));
        let x = e(&[0.3, -1.2, 2.5]);
        assert_eq!(a.multiply(&a.unit(), &x).unwrap(), x);
        assert!(a.multiply(&e(&[1., 0.]), &x).is_err());
    }

    #[test]
    fn regular_representation_of_x_is_shift() {
        let a = StructureConstants::truncated_polynomial(3);
        let rho = a.regular_representation(&e(&[0., 1., 0.])).unwrap();
        // rho(X) e_j = e_{j+1}: hand-expanded columns
        let expected = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 1., 0., 0., 0., 1., 0.]);
        assert_eq!(rho, expected);
        assert_eq!(a.regular_representation(&a.unit::<f64>()).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn units_and_inverses() {
        let a = StructureConstants::truncated_polynomial(3);
        assert!(a.is_unit(&a.unit::<f64>()).unwrap());
        assert!(!a.is_unit(&e(&[0., 1., 0.])).unwrap());
        let two_plus_x = q(&[2, 1, 0]);
        assert!(a.is_unit(&two_plus_x).unwrap());
        // det rho(2 + X) = 8: triangular with diagonal 2
        let rows = a.rho_rows(&two_plus_x).unwrap();
        assert_eq!(rational::det(&rows, 0.0), int(8));
        let inv = a.invert(&q(&[1, 1, 0])).unwrap();
        assert_eq!(inv, q(&[1, -1, 1]));
        assert_eq!(a.multiply(&inv, &q(&[1, 1, 0])).unwrap(), a.unit());
        assert_eq!(a.invert(&q(&[2, 0, 0])).unwrap().coeffs[0], ratio(1, 2));
        assert!(matches!(a.invert(&q(&[0, 1, 0])), Err(Error::SingularElement)));
    }

    #[test]
    fn nilradical_catalog() {
        for d in 2..6 {
            let a = StructureConstants::truncated_polynomial(d);
            assert_eq!(a.nilradical().nilpotency_class, d);
            assert_eq!(a.nilradical().basis.len(), d - 1);
            let t = StructureConstants::square_zero_extension(d);
            assert_eq!(t.nilradical().nilpotency_class, 2);
        }
        for av in [-1, 0, 1] {
            let a = StructureConstants::class_three_quartic(int(av));
            assert_eq!(a.nilradical().nilpotency_class, 3);
            assert_eq!(a.nilradical().power_dims, vec![3, 1, 0]);
        }
    }

    #[test]
    fn nilradical_basis_is_nilpotent() {
        let a = StructureConstants::class_three_quartic(int(1));
        for b in &a.nilradical().basis {
            let p = a.power(b, 3).unwrap();
            assert!(p.is_zero());
        }
    }

    #[test]
    fn adapted_bases() {
        let a = StructureConstants::truncated_polynomial(3);
        assert_eq!(a.adapted_basis().unwrap(), vec![q(&[1, 0, 0]), q(&[0, 1, 0]), q(&[0, 0, 1])]);
        let h = StructureConstants::class_three_quartic(int(-1));
        let basis = h.adapted_basis().unwrap();
        assert_eq!(basis, vec![q(&[1, 0, 0, 0]), q(&[0, 1, 0, 0]), q(&[0, 0, 1, 0]), q(&[0, 0, 0, 1])]);
        let two = StructureConstants::square_zero_extension(2);
        assert_eq!(two.adapted_basis().unwrap(), vec![q(&[1, 0]), q(&[0, 1])]);
    }

    #[test]
    fn adapted_tails_are_ideals() {
        // basis (1, X^2, X) of R[X]/(X^3): reordering must be undone
        let base = StructureConstants::truncated_polynomial(3);
        let shuffled = base.in_basis(&[q(&[1, 0, 0]), q(&[0, 0, 1]), q(&[0, 1, 0])]).unwrap();
        let basis = shuffled.adapted_basis().unwrap();
        let n = basis.len();
        for k in 1..n {
            let tail: Vec<Vec<Rational>> = basis[k..].iter().map(|b| b.coeffs.clone()).collect();
            for i in 0..n {
                for t in &basis[k..] {
                    let p = shuffled.multiply(&basis[i], t).unwrap();
                    assert!(rational::solve_in_span(&tail, &p.coeffs, 0.0).is_some());
                }
            }
        }
        assert_eq!(basis[1], q(&[0, 0, 1]));
    }

    #[test]
    fn classification_invariants() {
        let inv = |a: i64| StructureConstants::class_three_quartic(int(a)).isomorphism_invariants().unwrap().form;
        assert_eq!(inv(1), Some((2, 2)));
        assert_eq!(inv(0), Some((1, 1)));
        assert_eq!(inv(-1), Some((2, 0)));
        assert_eq!(inv(4), inv(1));
        assert_eq!(StructureConstants::truncated_polynomial(4).isomorphism_invariants().unwrap().form, None);
        assert!(StructureConstants::truncated_polynomial(5).isomorphism_invariants().is_err());
    }

    #[test]
    fn direct_sums() {
        let rr = StructureConstants::direct_sum(&[StructureConstants::reals(), StructureConstants::reals()]).unwrap();
        assert_eq!(rr.dim(), 2);
        assert_eq!(rr.multiply(&e(&[2., 3.]), &e(&[5., 7.])).unwrap(), e(&[10., 21.]));
        assert_eq!(rr.unit::<f64>(), e(&[1., 1.]));
        let s = StructureConstants::direct_sum(&[
            StructureConstants::truncated_polynomial(2),
            StructureConstants::reals(),
        ])
        .unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.nilradical().power_dims, vec![1, 0]);
        assert!(!s.is_irreducible());
        let one = StructureConstants::direct_sum(&[StructureConstants::truncated_polynomial(3)]).unwrap();
        assert_eq!(one.dim(), 3);
        let inv = s.invert(&q(&[2, 1, 4])).unwrap();
        assert_eq!(s.multiply(&inv, &q(&[2, 1, 4])).unwrap(), s.unit());
    }

    #[test]
    fn rejects_invalid_tensors() {
        let mut t = vec![0.0; 8];
        t[idx(2, 0, 0, 0)] = 1.0;
        t[idx(2, 0, 1, 1)] = 1.0;
        t[idx(2, 1, 0, 1)] = 1.0;
        t[idx(2, 1, 1, 0)] = 1.0;
        assert!(StructureConstants::from_f64(2, t.clone(), 0).is_ok());
        t[idx(2, 0, 1, 1)] = 0.5;
        assert!(StructureConstants::from_f64(2, t, 0).is_err());
    }

    #[test]
    fn json_round_trip_with_fractions() {
        let a = StructureConstants::class_three_quartic(ratio(1, 2));
        let js = a.to_json().to_string();
        assert!(js.contains("\"1/2\""));
        let b = StructureConstants::from_json(&js).unwrap();
        assert!(b.is_exact());
        assert_eq!(b.isomorphism_invariants().unwrap(), a.isomorphism_invariants().unwrap());
        assert!(StructureConstants::from_json("{\"dim\": 2}").is_err());
    }

    #[test]
    fn float_input_classifies_exactly() {
        let a = StructureConstants::class_three_quartic(int(-1));
        let t: Vec<f64> = a.approx.clone();
        let b = StructureConstants::from_f64(4, t, 0).unwrap();
        assert!(!b.is_exact());
        assert_eq!(b.isomorphism_invariants().unwrap().form, Some((2, 0)));
    }

    fn catalog() -> Vec<StructureConstants> {
        vec![
            StructureConstants::truncated_polynomial(3),
            StructureConstants::truncated_polynomial(4),
            StructureConstants::square_zero_extension(4),
            StructureConstants::class_three_quartic(int(-1)),
            StructureConstants::class_three_quartic(int(1)),
            StructureConstants::direct_sum(&[
                StructureConstants::truncated_polynomial(2),
                StructureConstants::truncated_polynomial(3),
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn regular_representation_is_faithful() {
        for a in catalog() {
            let n = a.dim();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| a.regular_representation(&AlgebraElement::<f64>::basis(n, i)).unwrap().iter().copied().collect())
                .collect();
            assert_eq!(rational::rank(&rows, 1e-12), n);
        }
    }

    #[test]
    fn class_of_direct_sum_is_max() {
        let s = StructureConstants::direct_sum(&[
            StructureConstants::truncated_polynomial(2),
            StructureConstants::truncated_polynomial(4),
            StructureConstants::square_zero_extension(3),
        ])
        .unwrap();
        assert_eq!(s.nilradical().nilpotency_class, 4);
    }

    proptest! {
        #[test]
        fn homomorphism_and_laws(which in 0usize..6, seed in prop::collection::vec(-2.0f64..2.0, 24)) {
            let a = &catalog()[which];
            let n = a.dim();
            let x = e(&seed[..n]);
            let y = e(&seed[8..8 + n]);
            let z = e(&seed[16..16 + n]);
            let xy = a.multiply(&x, &y).unwrap();
            let lhs = a.regular_representation(&xy).unwrap();
            let rhs = a.regular_representation(&x).unwrap() * a.regular_representation(&y).unwrap();
            prop_assert!((lhs - rhs).amax() < 1e-10);
            prop_assert!((&xy - &a.multiply(&y, &x).unwrap()).coeffs.iter().all(|c| c.abs() < 1e-12));
            let l = a.multiply(&xy, &z).unwrap();
            let r = a.multiply(&x, &a.multiply(&y, &z).unwrap()).unwrap();
            prop_assert!((&l - &r).coeffs.iter().all(|c| c.abs() < 1e-10));
        }

        #[test]
        fn double_inverse(which in 0usize..6, seed in prop::collection::vec(-2.0f64..2.0, 8)) {
            let a = &catalog()[which];
            let n = a.dim();
            let mut c = seed[..n].to_vec();
            // push away from the non-units
            let u: AlgebraElement = a.unit();
            for (ci, ui) in c.iter_mut().zip(&u.coeffs) {
                *ci += 3.0 * ui;
            }
            let x = e(&c);
            prop_assume!(a.is_unit(&x).unwrap());
            let back = a.invert(&a.invert(&x).unwrap()).unwrap();
            prop_assert!((&back - &x).coeffs.iter().all(|v| v.abs() < 1e-10));
            let one = a.multiply(&x, &a.invert(&x).unwrap()).unwrap();
            prop_assert!((&one - &u).coeffs.iter().all(|v| v.abs() < 1e-10));
        }
    }
}
