//! Exact integer and rational linear algebra for small matrices.

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

pub type Rational = Rational64;

/// Determinant of a square integer matrix by fraction-free elimination (Bareiss).
pub fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(p) => {
                    a.swap(k, p);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

/// Inverse of a unimodular integer matrix via the adjugate.
pub fn unimodular_inverse(m: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = m.len();
    let det = int_det(m);
    if det.abs() != 1 {
        return None;
    }
    let mut inv = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i64>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| m[r][c]).collect())
                .collect();
            let cof = if (i + j) % 2 == 0 { 1 } else { -1 } * int_det(&minor);
            inv[i][j] = cof * det;
        }
    }
    Some(inv)
}

/// Primitive generator of the kernel of an (n-1) x n integer matrix of full rank,
/// by signed maximal minors. Returns None if the rank is deficient.
pub fn kernel_vector(rows: &[Vec<i64>], n: usize) -> Option<Vec<i64>> {
    let mut y = vec![0i64; n];
    for (j, yj) in y.iter_mut().enumerate() {
        let minor: Vec<Vec<i64>> = rows
            .iter()
            .map(|r| (0..n).filter(|&c| c != j).map(|c| r[c]).collect())
            .collect();
        let sgn = if j % 2 == 0 { 1 } else { -1 };
        *yj = sgn * int_det(&minor);
    }
    let g = y.iter().fold(0i64, |g, &v| g.gcd(&v));
    if g == 0 {
        return None;
    }
    Some(y.iter().map(|v| v / g).collect())
}

pub fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Solve the square system `a x = b` exactly; None if singular.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for i in 0..n {
            if i != col && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in col..=n {
                    let t = m[col][j];
                    m[i][j] -= f * t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n]).collect())
}

/// Rank of a rational matrix.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m = rows.to_vec();
    if m.is_empty() {
        return 0;
    }
    let ncol = m[0].len();
    let mut r = 0;
    for col in 0..ncol {
        let Some(piv) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        for i in r + 1..m.len() {
            if !m[i][col].is_zero() {
                let f = m[i][col] / m[r][col];
                for j in col..ncol {
                    let t = m[r][j];
                    m[i][j] -= f * t;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

pub fn dot_int_rat(a: &[i64], x: &[Rational]) -> Rational {
    a.iter()
        .zip(x)
        .fold(Rational::zero(), |acc, (&ai, &xi)| acc + xi * ai)
}

pub fn lcm_denominators(x: &[Rational]) -> i64 {
    x.iter().fold(1i64, |l, v| l.lcm(v.denom()))
}

pub fn rat_to_f64(x: &Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

pub fn floor_rat(x: &Rational) -> i64 {
    x.floor().to_integer()
}

pub fn ceil_rat(x: &Rational) -> i64 {
    x.ceil().to_integer()
}

/// Fractional part in [0, 1).
pub fn frac(x: &Rational) -> Rational {
    let f = *x - x.floor();
    if f.is_negative() {
        f + Rational::one()
    } else {
        f
    }
}

/// Calls `f` for every k-subset of 0..n in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        f(&idx);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Calls `f` for every integer point of the box `lo..=hi` (componentwise), lexicographically.
pub fn for_each_box_point(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let n = lo.len();
    if (0..n).any(|i| lo[i] > hi[i]) {
        return;
    }
    let mut p = lo.to_vec();
    loop {
        f(&p);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if p[i] < hi[i] {
                p[i] += 1;
                for j in i + 1..n {
                    p[j] = lo[j];
                }
                break;
            }
        }
    }
}
