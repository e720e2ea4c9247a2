//! Bracketed scalar root finding: bisection to shrink the bracket, then
//! secant steps kept inside it.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootFailure {
    /// `f(lo)` and `f(hi)` have the same sign.
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    NotConverged {
        x: f64,
        residual: f64,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop when `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop when the bracket is narrower than this.
    pub x_tol: f64,
    /// Plain bisection steps before secant refinement starts.
    pub bisections: usize,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 0.0,
            x_tol: 1e-12,
            bisections: 8,
            max_iter: 200,
        }
    }
}

/// Finds `x` in `[lo, hi]` with `f(x) = 0`. `f` may fail; its error is returned as is.
pub fn find_root<E, F>(mut f: F, mut lo: f64, mut hi: f64, opts: RootOptions) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<RootFailure>,
{
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootFailure::NoSignChange { lo, hi, f_lo, f_hi }.into());
    }
    let x_tol = |lo: f64, hi: f64| opts.x_tol * (1.0 + lo.abs().max(hi.abs()));

    let mut best = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    for iter in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let x = if iter < opts.bisections {
            mid
        } else {
            // secant through the bracket ends, falling back to the midpoint
            let s = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            let margin = 1e-3 * (hi - lo);
            if s.is_finite() && s > lo + margin && s < hi - margin {
                s
            } else {
                mid
            }
        };
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= opts.f_tol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        if hi - lo <= x_tol(lo, hi) {
            return Ok(best.0);
        }
    }
    Err(RootFailure::NotConverged {
        x: best.0,
        residual: best.1,
    }
    .into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Fail(#[allow(dead_code)] RootFailure);
    impl From<RootFailure> for Fail {
        fn from(r: RootFailure) -> Self {
            Fail(r)
        }
    }

    #[test]
    fn finds_sqrt2() {
        let r =
            find_root::<Fail, _>(|x| Ok(x * x - 2.0), 0.0, 2.0, RootOptions::default()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn residual_tolerance() {
        let opts = RootOptions {
            f_tol: 1e-10,
            x_tol: 0.0,
            ..RootOptions::default()
        };
        let r = find_root::<Fail, _>(|x| Ok(x.exp() - 3.0), 0.0, 5.0, opts).unwrap();
        assert!((r.exp() - 3.0).abs() <= 1e-10);
    }

    #[test]
    fn no_sign_change() {
        let e = find_root::<Fail, _>(|x| Ok(x * x + 1.0), -1.0, 1.0, RootOptions::default());
        assert!(matches!(e, Err(Fail(RootFailure::NoSignChange { .. }))));
    }
}
