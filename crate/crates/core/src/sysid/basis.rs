//! Polynomial basis terms over lagged, normalized inputs and outputs.
//!
//! Regressor variables are ordered `y(k-1) .. y(k-n_a), u(k) .. u(k-n_b+1)`;
//! a term is a monomial over these variables with bounded total degree.
//! The textual form (`1`, `y2`, `y1^2*u0`) is the canonical serialization.

use crate::error::SysIdError;
use std::fmt;

/// One monomial, stored as a dense exponent vector over the regressor
/// variables plus a precomputed sparse factor list for evaluation.
#[derive(Debug, Clone)]
pub struct Term {
    exponents: Vec<u8>,
    factors: Vec<(u32, u8)>,
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.exponents == other.exponents
    }
}

impl Eq for Term {}

impl Term {
    pub fn constant(n_vars: usize) -> Self {
        Self::from_exponents(vec![0; n_vars])
    }

    pub fn from_exponents(exponents: Vec<u8>) -> Self {
        let factors = exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i as u32, e))
            .collect();
        Term { exponents, factors }
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    pub fn exponents(&self) -> &[u8] {
        &self.exponents
    }

    #[inline]
    pub fn eval(&self, lag_values: &[f64]) -> f64 {
        let mut acc = 1.0;
        for &(i, e) in &self.factors {
            let v = lag_values[i as usize];
            match e {
                1 => acc *= v,
                2 => acc *= v * v,
                _ => acc *= v.powi(e as i32),
            }
        }
        acc
    }

    /// Partial derivative of the monomial with respect to one variable.
    #[inline]
    pub fn grad(&self, var: usize, lag_values: &[f64]) -> f64 {
        let mut acc = 1.0;
        let mut differentiated = false;
        for &(i, e) in &self.factors {
            let v = lag_values[i as usize];
            if i as usize == var {
                differentiated = true;
                acc *= e as f64
                    * match e {
                        1 => 1.0,
                        2 => v,
                        _ => v.powi(e as i32 - 1),
                    };
            } else {
                acc *= match e {
                    1 => v,
                    2 => v * v,
                    _ => v.powi(e as i32),
                };
            }
        }
        if differentiated {
            acc
        } else {
            0.0
        }
    }

    /// Canonical text form given the variable split: `y1..y{n_a}` output
    /// lags, `u0..u{n_b-1}` input lags, `z0..` filtered-input channels.
    pub fn display_split(&self, output_lags: usize, input_lags: usize) -> String {
        if self.degree() == 0 {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let name = if i < output_lags {
                format!("y{}", i + 1)
            } else if i < output_lags + input_lags {
                format!("u{}", i - output_lags)
            } else {
                format!("z{}", i - output_lags - input_lags)
            };
            if e == 1 {
                parts.push(name);
            } else {
                parts.push(format!("{name}^{e}"));
            }
        }
        parts.join("*")
    }

    /// [`Term::display_split`] with every non-output variable treated as
    /// an input lag.
    pub fn display(&self, output_lags: usize) -> String {
        self.display_split(output_lags, self.exponents.len().saturating_sub(output_lags))
    }

    /// Parses the canonical text form.
    pub fn parse(
        text: &str,
        output_lags: usize,
        input_lags: usize,
        filters: usize,
    ) -> Result<Self, SysIdError> {
        let n_vars = output_lags + input_lags + filters;
        let bad = |msg: String| SysIdError::InvalidConfig(format!("term '{text}': {msg}"));
        let mut exponents = vec![0u8; n_vars];
        let trimmed = text.trim();
        if trimmed == "1" {
            return Ok(Term::from_exponents(exponents));
        }
        for factor in trimmed.split('*') {
            let (var_text, exp) = match factor.split_once('^') {
                Some((v, e)) => {
                    let exp: u8 =
                        e.parse().map_err(|_| bad(format!("bad exponent '{e}'")))?;
                    (v, exp)
                }
                None => (factor, 1),
            };
            let var_text = var_text.trim();
            let idx = if let Some(lag) = var_text.strip_prefix('y') {
                let lag: usize = lag.parse().map_err(|_| bad(format!("bad lag '{var_text}'")))?;
                if lag == 0 || lag > output_lags {
                    return Err(bad(format!("output lag {lag} outside 1..={output_lags}")));
                }
                lag - 1
            } else if let Some(lag) = var_text.strip_prefix('u') {
                let lag: usize = lag.parse().map_err(|_| bad(format!("bad lag '{var_text}'")))?;
                if lag >= input_lags {
                    return Err(bad(format!("input lag {lag} outside 0..{input_lags}")));
                }
                output_lags + lag
            } else if let Some(ch) = var_text.strip_prefix('z') {
                let ch: usize = ch.parse().map_err(|_| bad(format!("bad channel '{var_text}'")))?;
                if ch >= filters {
                    return Err(bad(format!("filter channel {ch} outside 0..{filters}")));
                }
                output_lags + input_lags + ch
            } else {
                return Err(bad(format!("unknown variable '{var_text}'")));
            };
            exponents[idx] = exponents[idx]
                .checked_add(exp)
                .ok_or_else(|| bad("exponent overflow".into()))?;
        }
        Ok(Term::from_exponents(exponents))
    }
}

impl fmt::Display for Term {
    /// Falls back to treating every variable as an output lag; prefer
    /// [`Term::display`] with the true lag split.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(self.exponents.len()))
    }
}

/// Enumerates all monomials with total degree in `1..=max_degree` over
/// `n_vars` variables, graded order (degree first, then lexicographic on
/// exponent vectors).
pub fn monomials(n_vars: usize, max_degree: usize) -> Vec<Term> {
    let mut out = Vec::new();
    for degree in 1..=max_degree {
        let mut exps = vec![0u8; n_vars];
        enumerate_of_degree(&mut exps, 0, degree, &mut out);
    }
    out
}

fn enumerate_of_degree(exps: &mut Vec<u8>, var: usize, remaining: usize, out: &mut Vec<Term>) {
    if var + 1 == exps.len() {
        exps[var] = remaining as u8;
        out.push(Term::from_exponents(exps.clone()));
        exps[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[var] = e as u8;
        enumerate_of_degree(exps, var + 1, remaining - e, out);
        exps[var] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_two_basis_over_two_variables_has_six_terms() {
        // {1} + {y1, u0} + {y1^2, y1*u0, u0^2}
        let terms = monomials(2, 2);
        assert_eq!(terms.len() + 1, 6);
    }

    #[test]
    fn monomial_count_matches_binomial() {
        // Monomials of degree <= d over v variables: C(v + d, d).
        let v = 10;
        let d = 3;
        let count = monomials(v, d).len() + 1;
        assert_eq!(count, 286);
    }

    #[test]
    fn eval_and_roundtrip() {
        let terms = monomials(4, 3);
        let vals = [2.0f64, -1.0, 0.5, 3.0];
        for t in &terms {
            let txt = t.display(2);
            let back = Term::parse(&txt, 2, 2, 0).unwrap();
            assert_eq!(t, &back, "roundtrip of '{txt}'");
            let expect: f64 = t
                .exponents()
                .iter()
                .enumerate()
                .map(|(i, &e)| vals[i].powi(e as i32))
                .product();
            assert!((t.eval(&vals) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_rejects_out_of_range_lags() {
        assert!(Term::parse("y3", 2, 2, 0).is_err());
        assert!(Term::parse("u2", 2, 2, 0).is_err());
        assert!(Term::parse("z1", 2, 2, 0).is_err());
        assert!(Term::parse("y0", 2, 2, 0).is_err());
    }

    #[test]
    fn constant_term_displays_as_one() {
        let t = Term::constant(4);
        assert_eq!(t.display(2), "1");
        assert_eq!(t.eval(&[9.0, 9.0, 9.0, 9.0]), 1.0);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let terms = monomials(3, 3);
        let x = [1.3f64, -0.7, 2.1];
        let h = 1e-7;
        for t in &terms {
            for var in 0..3 {
                let mut xp = x;
                xp[var] += h;
                let mut xm = x;
                xm[var] -= h;
                let fd = (t.eval(&xp) - t.eval(&xm)) / (2.0 * h);
                let an = t.grad(var, &x);
                assert!(
                    (fd - an).abs() < 1e-5 * (1.0 + an.abs()),
                    "term {} var {var}: fd {fd} vs {an}",
                    t.display(3)
                );
            }
        }
    }
}
