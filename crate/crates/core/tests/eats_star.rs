//! No arrow table on the four-element semilattice satisfies (∗).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use webbed::webs::{check_eats_star, Eats};
use webbed::Error;

const FOUR_MEET: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 1, 3, 3], [2, 3, 2, 3], [3, 3, 3, 3]];

/// Counts the arrow tables satisfying (∗) for families of size ≤ 1, by
/// backtracking over the cells in row-major order.
fn count_tables(meet: &[Vec<usize>], omega: usize) -> usize {
    let n = meet.len();
    let leq = |x: usize, y: usize| meet[x][y] == x;
    let mut arrow = vec![vec![None::<usize>; n]; n];

    let consistent = |arrow: &Vec<Vec<Option<usize>>>| -> bool {
        for g in 0..n {
            for d in 0..n {
                let Some(gd) = arrow[g][d] else { continue };
                // empty family
                if gd == omega && d != omega {
                    return false;
                }
                for a in 0..n {
                    for b in 0..n {
                        let Some(ab) = arrow[a][b] else { continue };
                        if leq(ab, gd) {
                            let fired = if leq(g, a) { b } else { omega };
                            if !leq(fired, d) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    };

    fn go(
        cell: usize,
        n: usize,
        arrow: &mut Vec<Vec<Option<usize>>>,
        ok: &dyn Fn(&Vec<Vec<Option<usize>>>) -> bool,
    ) -> usize {
        if cell == n * n {
            return 1;
        }
        let (x, y) = (cell / n, cell % n);
        let mut count = 0;
        for v in 0..n {
            arrow[x][y] = Some(v);
            if ok(arrow) {
                count += go(cell + 1, n, arrow, ok);
            }
        }
        arrow[x][y] = None;
        count
    }
    go(0, n, &mut arrow, &consistent)
}

#[test]
fn one_point_table_is_the_only_solution() {
    assert_eq!(count_tables(&[vec![0]], 0), 1);
}

#[test]
fn two_element_chain_has_none() {
    assert_eq!(count_tables(&[vec![0, 1], vec![1, 1]], 0), 0);
}

#[test]
fn four_element_semilattice_has_none() {
    let meet: Vec<Vec<usize>> = FOUR_MEET.iter().map(|r| r.to_vec()).collect();
    assert_eq!(count_tables(&meet, 0), 0);
}

#[test]
fn library_check_rejects_random_four_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let arrow: Vec<Vec<usize>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(0..4)).collect()).collect();
        let e = Eats::four(arrow).unwrap();
        assert!(matches!(check_eats_star(&e, 1), Err(Error::StarViolated(_))));
    }
}
