//! Restarted GMRES with right preconditioning.

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct GmresOutcome<T: Scalar> {
    pub x: Vec<T>,
    pub iterations: usize,
    /// Final `‖b − A x‖₂ / ‖b‖₂`.
    pub relative_residual: T,
    pub converged: bool,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        return (T::one(), T::zero());
    }
    let r = a.hypot(b);
    (a / r, b / r)
}

/// Solves `A x = b` starting from `x = 0`.
///
/// `apply` computes `A v`, `precondition` computes `M⁻¹ v`; the iteration
/// runs on `A M⁻¹` and maps the result back through `M⁻¹`.
pub fn gmres<T: Scalar>(
    mut apply: impl FnMut(&[T]) -> Vec<T>,
    precondition: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    rel_tol: T,
    restart: usize,
    max_iters: usize,
) -> GmresOutcome<T> {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![T::zero(); n];
    if b_norm == T::zero() {
        return GmresOutcome {
            x,
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        };
    }
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut rel = T::one();

    while iterations < max_iters {
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= rel_tol {
            break;
        }
        let mut basis: Vec<Vec<T>> = vec![r.iter().map(|&v| v / beta).collect()];
        let mut h: Vec<Vec<T>> = Vec::new();
        let mut cs: Vec<(T, T)> = Vec::new();
        let mut g = vec![beta];
        let mut inner = 0;

        while inner < restart && iterations < max_iters {
            let mut w = apply(&precondition(&basis[inner]));
            let mut col = Vec::with_capacity(inner + 2);
            // Modified Gram–Schmidt.
            for v in &basis {
                let hij = dot(&w, v);
                for (wk, &vk) in w.iter_mut().zip(v) {
                    *wk = *wk - hij * vk;
                }
                col.push(hij);
            }
            let h_next = norm(&w);
            col.push(h_next);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (c, s) = givens(col[inner], col[inner + 1]);
            col[inner] = c * col[inner] + s * col[inner + 1];
            col[inner + 1] = T::zero();
            cs.push((c, s));
            let gi = g[inner];
            g[inner] = c * gi;
            g.push(-s * gi);
            h.push(col);
            inner += 1;
            iterations += 1;
            rel = g[inner].abs() / b_norm;
            if rel <= rel_tol || h_next == T::zero() {
                break;
            }
            basis.push(w.iter().map(|&v| v / h_next).collect());
        }

        // Back substitution on the triangularized Hessenberg system.
        let mut y = vec![T::zero(); inner];
        for i in (0..inner).rev() {
            let mut acc = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                acc = acc - h[j][i] * *yj;
            }
            y[i] = acc / h[i][i];
        }
        let mut z = vec![T::zero(); n];
        for (yi, v) in y.iter().zip(&basis) {
            for (zk, &vk) in z.iter_mut().zip(v) {
                *zk = *zk + *yi * vk;
            }
        }
        let dx = precondition(&z);
        for (xk, dk) in x.iter_mut().zip(dx) {
            *xk = *xk + dk;
        }
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        rel = norm(&r) / b_norm;
        if rel <= rel_tol {
            break;
        }
    }
    GmresOutcome {
        x,
        iterations,
        relative_residual: rel,
        converged: rel <= rel_tol,
    }
}
