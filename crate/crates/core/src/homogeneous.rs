//! Structure equations of SU(3) and SU(2) and their invariant 2-forms.

use crate::exterior::{Coframe, Form};
use crate::scalar::{Expr, Rational};

/// Rows `d θ_a` of SU(3) as `(i, j, c)` with 1-based θ indices.
const SU3_ROWS: [&[(usize, usize, i64)]; 8] = [
    &[(5, 6, -1), (7, 8, 1)],
    &[(3, 4, -2), (5, 6, -1), (7, 8, -1)],
    &[(2, 4, 2), (5, 7, -1), (6, 8, 1)],
    &[(2, 3, -2), (5, 8, -1), (6, 7, -1)],
    &[(1, 6, 3), (2, 6, 1), (3, 7, 1), (4, 8, 1)],
    &[(1, 5, -3), (2, 5, -1), (3, 8, -1), (4, 7, 1)],
    &[(1, 8, -3), (2, 8, 1), (3, 5, -1), (4, 6, -1)],
    &[(1, 7, 3), (2, 7, -1), (3, 6, 1), (4, 5, -1)],
];

/// Left-invariant coframe θ1…θ8 of SU(3), optionally preceded by `dr`.
pub fn su3_coframe(with_radial: bool) -> Coframe {
    let off = usize::from(with_radial);
    let mut labels = Vec::new();
    if with_radial {
        labels.push("dr");
    }
    labels.extend(["θ1", "θ2", "θ3", "θ4", "θ5", "θ6", "θ7", "θ8"]);
    let mut rows: Vec<Vec<(usize, usize, Rational)>> = Vec::new();
    if with_radial {
        rows.push(vec![]);
    }
    for row in SU3_ROWS {
        rows.push(
            row.iter()
                .map(|&(i, j, c)| (i - 1 + off, j - 1 + off, Rational::from_integer(c)))
                .collect(),
        );
    }
    let name = if with_radial { "su3+dr" } else { "su3" };
    Coframe::new(name, &labels, with_radial.then_some(0), rows).expect("SU(3) table is Jacobi")
}

/// `dr, η1, η2, η3` with `dη_i = ε_ijk η_jk / 2`.
pub fn su2_coframe() -> Coframe {
    let one = Rational::from_integer(1);
    let rows = vec![
        vec![],
        vec![(2, 3, one)],
        vec![(3, 1, one)],
        vec![(1, 2, one)],
    ];
    Coframe::new("su2+dr", &["dr", "η1", "η2", "η3"], Some(0), rows).expect("SU(2) table is Jacobi")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// T*CP² (and the spinor bundle), coframe `dr, θ1…θ8`.
    Tcp2,
    /// Eguchi–Hanson, coframe `dr, η1, η2, η3`.
    Eh,
}

/// `σ2 = θ57 + θ86`.
pub fn sigma2(cf: &Coframe) -> Form {
    Form::mono(cf, Expr::one(), &["θ5", "θ7"]).add(&Form::mono(cf, Expr::one(), &["θ8", "θ6"]))
}

/// `σ3 = θ58 + θ67`.
pub fn sigma3(cf: &Coframe) -> Form {
    Form::mono(cf, Expr::one(), &["θ5", "θ8"]).add(&Form::mono(cf, Expr::one(), &["θ6", "θ7"]))
}

/// Spanning invariant 2-forms (constant coefficients).
pub fn invariant_two_forms(space: Space) -> Vec<Form> {
    match space {
        Space::Tcp2 => {
            let cf = su3_coframe(true);
            let m = |ls: &[&str]| Form::mono(&cf, Expr::one(), ls);
            vec![
                m(&["dr", "θ2"]),
                m(&["dr", "θ3"]),
                m(&["dr", "θ4"]),
                m(&["θ2", "θ3"]),
                m(&["θ2", "θ4"]),
                m(&["θ3", "θ4"]),
                m(&["θ5", "θ6"]),
                m(&["θ7", "θ8"]),
                sigma2(&cf),
                sigma3(&cf),
            ]
        }
        Space::Eh => {
            let cf = su2_coframe();
            let m = |ls: &[&str]| Form::mono(&cf, Expr::one(), ls);
            vec![
                m(&["dr", "η1"]),
                m(&["dr", "η2"]),
                m(&["dr", "η3"]),
                m(&["η2", "η3"]),
                m(&["η3", "η1"]),
                m(&["η1", "η2"]),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::d;
    use crate::scalar::ParamEnv;

    #[test]
    fn rows_match_table() {
        let cf = su3_coframe(false);
        let d2 = d(&Form::mono(&cf, Expr::one(), &["θ2"]));
        let env = ParamEnv::new();
        let c = |ls: &[&str]| d2.coeff_of(ls).eval(0.0, &env).unwrap();
        assert_eq!(c(&["θ3", "θ4"]), -2.0);
        assert_eq!(c(&["θ5", "θ6"]), -1.0);
        assert_eq!(c(&["θ7", "θ8"]), -1.0);
        let d5 = d(&Form::mono(&cf, Expr::one(), &["θ5"]));
        let c5 = |ls: &[&str]| d5.coeff_of(ls).eval(0.0, &env).unwrap();
        assert_eq!(c5(&["θ1", "θ6"]), 3.0);
        assert_eq!(c5(&["θ2", "θ6"]), 1.0);
        assert_eq!(c5(&["θ3", "θ7"]), 1.0);
        assert_eq!(c5(&["θ4", "θ8"]), 1.0);
    }

    #[test]
    fn jacobi_exact() {
        for with_radial in [false, true] {
            let cf = su3_coframe(with_radial);
            for a in 0..cf.dim() {
                assert!(cf.d_squared_exact(a).is_empty());
            }
        }
        let cf = su2_coframe();
        for a in 0..4 {
            assert!(cf.d_squared_exact(a).is_empty());
        }
    }

    #[test]
    fn su2_rows() {
        let cf = su2_coframe();
        let env = ParamEnv::new();
        let d1 = d(&Form::mono(&cf, Expr::one(), &["η1"]));
        assert_eq!(d1.coeff_of(&["η2", "η3"]).eval(0.0, &env).unwrap(), 1.0);
        let d2 = d(&Form::mono(&cf, Expr::one(), &["η2"]));
        assert_eq!(d2.coeff_of(&["η1", "η3"]).eval(0.0, &env).unwrap(), -1.0);
    }

    #[test]
    fn broken_table_rejected() {
        let one = Rational::from_integer(1);
        let rows = vec![vec![(1, 2, one)], vec![], vec![(0, 3, one)], vec![]];
        assert!(Coframe::new("bad", &["a", "b", "c", "d"], None, rows).is_err());
    }

    #[test]
    fn invariant_counts() {
        assert_eq!(invariant_two_forms(Space::Tcp2).len(), 10);
        assert_eq!(invariant_two_forms(Space::Eh).len(), 6);
        let cf = su3_coframe(true);
        let s2 = sigma2(&cf);
        let env = ParamEnv::new();
        assert_eq!(s2.coeff_of(&["θ5", "θ7"]).eval(0.0, &env).unwrap(), 1.0);
        assert_eq!(s2.coeff_of(&["θ6", "θ8"]).eval(0.0, &env).unwrap(), -1.0);
    }
}
