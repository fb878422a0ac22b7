//! Known eigenvalue matrices as functions of `q`, with columns in relation
//! order (identity, meet 1, meet 2, disjoint; spliced variants split the last
//! three by square type).

use serde::Serialize;

use super::{canonical_rows, EigenData};
use crate::circle_geometry::CircleGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SchemeCase {
    MobiusEven,
    LaguerreOdd,
    MinkowskiEven,
    ExtendedLaguerre,
    SplicedMinkowskiOdd,
}

impl SchemeCase {
    /// The case covering this geometry and relation choice, if any.
    pub fn of(geom: &CircleGeometry, spliced: bool) -> Option<SchemeCase> {
        let odd = geom.q % 2 == 1;
        match (geom.rho, odd, geom.extended, spliced) {
            (_, false, true, false) => Some(SchemeCase::ExtendedLaguerre),
            (0, false, false, false) => Some(SchemeCase::MobiusEven),
            (1, true, false, false) => Some(SchemeCase::LaguerreOdd),
            (2, false, false, false) => Some(SchemeCase::MinkowskiEven),
            (2, true, false, true) => Some(SchemeCase::SplicedMinkowskiOdd),
            _ => None,
        }
    }
}

/// Rows of the eigenvalue matrix and, where known, the multiplicities in the
/// same row order.
pub fn expected_matrix(case: SchemeCase, q: i64) -> (Vec<Vec<i64>>, Option<Vec<u64>>) {
    match case {
        SchemeCase::MobiusEven => (
            vec![
                vec![1, q * q - 1, q * q * (q + 1) / 2, q * (q - 1) * (q - 2) / 2],
                vec![1, q - 1, -q, 0],
                vec![1, -2, q * (q - 1) / 2, -(q + 1) * (q - 2) / 2],
                vec![1, -(q + 1), 0, q],
            ],
            None,
        ),
        SchemeCase::LaguerreOdd => (
            vec![
                vec![1, q * q - 1, q * (q * q - 1) / 2, q * (q - 1) * (q - 1) / 2],
                vec![1, -1, q * (q - 1) / 2, -q * (q - 1) / 2],
                vec![1, q - 1, -q, 0],
                vec![1, -(q + 1), 0, q],
            ],
            None,
        ),
        SchemeCase::MinkowskiEven => (
            vec![
                vec![1, q * q - 1, q * (q + 1) * (q - 2) / 2, (q - 1) * q * q / 2],
                vec![1, q - 1, -q, 0],
                vec![1, -(q + 1), 0, q],
                vec![1, 0, (q * q - q - 2) / 2, -(q - 1) * q / 2],
            ],
            None,
        ),
        SchemeCase::ExtendedLaguerre => (
            vec![
                vec![1, (q + 2) * (q + 1) / 2 * (q - 1), (q - 1) * (q - 1) * q / 2],
                vec![1, -(q + 2) / 2, q / 2],
                vec![1, (q + 1) * (q - 2) / 2, -(q - 1) * q / 2],
            ],
            None,
        ),
        SchemeCase::SplicedMinkowskiOdd => {
            let a = q * (q - 3) * (q + 1) / 4;
            let b = q * (q * q - 1) / 4;
            let c = q * (q - 1) * (q - 1) / 4;
            let a1 = (q - 3) * (q + 1) / 4;
            let b1 = (q * q - 1) / 4;
            let c1 = (q - 1) * (q - 1) / 4;
            let rows = vec![
                vec![1, q * q - 1, a, b, c, b],
                vec![1, q * q - 1, a, -b, c, -b],
                vec![1, 0, a1, b1, -c1, -b1],
                vec![1, 0, a1, -b1, -c1, b1],
                vec![1, -(q + 1), 0, 0, q, 0],
                vec![1, q - 1, -q, 0, 0, 0],
            ];
            let mults = vec![
                1,
                1,
                (q * q) as u64,
                (q * q) as u64,
                ((q - 1).pow(3) / 2) as u64,
                ((q + 1) * (q + 1) * (q - 3) / 2) as u64,
            ];
            if q == 3 {
                // The relation "meet in 2, same type" is empty and the last
                // eigenspace vanishes.
                let rows = rows[..5]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(i, _)| i != 2).map(|(_, &v)| v).collect())
                    .collect();
                (rows, Some(mults[..5].to_vec()))
            } else {
                (rows, Some(mults))
            }
        }
    }
}

/// Outcome of comparing a computed eigenvalue matrix with the known one.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub case: SchemeCase,
    pub matrix_matches: bool,
    pub multiplicities_match: Option<bool>,
    pub expected: Vec<Vec<i64>>,
    pub expected_multiplicities: Option<Vec<u64>>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.matrix_matches && self.multiplicities_match != Some(false)
    }
}

/// Compares up to row permutation, multiplicities following their rows.
pub fn compare(eigen: &EigenData, case: SchemeCase, q: i64) -> Comparison {
    let (rows, mults) = expected_matrix(case, q);
    let (rows, mults) = canonical_rows(&rows, mults.as_deref());
    let matrix_matches = rows == eigen.p_matrix;
    let multiplicities_match = mults.as_ref().map(|m| matrix_matches && *m == eigen.multiplicities);
    Comparison {
        case,
        matrix_matches,
        multiplicities_match,
        expected: rows,
        expected_multiplicities: mults,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_sums_vanish(rows: &[Vec<i64>]) -> bool {
        rows.iter().skip(1).all(|r| r.iter().sum::<i64>() == 0)
    }

    #[test]
    fn valency_rows_count_all_circles() {
        for q in [3i64, 4, 5, 7, 8, 9] {
            let b_mobius = q * q * q + q;
            let b_laguerre = q * q * q;
            let b_minkowski = q * q * q - q;
            let cases: Vec<(SchemeCase, i64)> = if q % 2 == 0 {
                vec![
                    (SchemeCase::MobiusEven, b_mobius),
                    (SchemeCase::MinkowskiEven, b_minkowski),
                    (SchemeCase::ExtendedLaguerre, b_laguerre),
                ]
            } else {
                vec![
                    (SchemeCase::LaguerreOdd, b_laguerre),
                    (SchemeCase::SplicedMinkowskiOdd, b_minkowski),
                ]
            };
            for (case, b) in cases {
                let (rows, mults) = expected_matrix(case, q);
                assert_eq!(rows[0].iter().sum::<i64>(), b, "{case:?} q={q}");
                assert!(row_sums_vanish(&rows), "{case:?} q={q}");
                if let Some(m) = mults {
                    assert_eq!(m.iter().sum::<u64>() as i64, b);
                }
            }
        }
    }

    #[test]
    fn spliced_at_five() {
        let (rows, mults) = expected_matrix(SchemeCase::SplicedMinkowskiOdd, 5);
        assert_eq!(rows[0], vec![1, 24, 15, 30, 20, 30]);
        assert_eq!(rows[2], vec![1, 0, 3, 6, -4, -6]);
        assert_eq!(rows[5], vec![1, 4, -5, 0, 0, 0]);
        assert_eq!(mults.unwrap(), vec![1, 1, 25, 25, 32, 36]);
    }

    #[test]
    fn spliced_at_three_drops_a_column() {
        let (rows, _) = expected_matrix(SchemeCase::SplicedMinkowskiOdd, 3);
        assert_eq!(
            rows,
            vec![
                vec![1, 8, 6, 3, 6],
                vec![1, 8, -6, 3, -6],
                vec![1, 0, 2, -1, -2],
                vec![1, 0, -2, -1, 2],
                vec![1, -4, 0, 3, 0],
            ]
        );
    }
}
