//! Pareto ranking for maximised objective vectors.

use std::cmp::Ordering;

/// `a` dominates `b`: no worse in every objective and better in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut better = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            better = true;
        }
    }
    better
}

/// Fast non-dominated sort. Returns fronts of point indices, best first;
/// indices inside a front are ascending.
pub fn nondominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, in front order.
pub fn crowding_distance(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives = points[front[0]].len();
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..objectives {
        order.sort_by(|&a, &b| {
            points[front[a]][m]
                .partial_cmp(&points[front[b]][m])
                .unwrap_or(Ordering::Equal)
        });
        let lo = points[front[order[0]]][m];
        let hi = points[front[order[n - 1]]][m];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            continue;
        }
        for w in 1..n - 1 {
            let prev = points[front[order[w - 1]]][m];
            let next = points[front[order[w + 1]]][m];
            dist[order[w]] += (next - prev) / span;
        }
    }
    dist
}

/// Rank (0 = first front) and crowding distance for every point.
pub fn rank_and_crowding(points: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; points.len()];
    let mut crowd = vec![0.0; points.len()];
    for (r, front) in nondominated_sort(points).iter().enumerate() {
        let d = crowding_distance(points, front);
        for (k, &i) in front.iter().enumerate() {
            rank[i] = r;
            crowd[i] = d[k];
        }
    }
    (rank, crowd)
}

/// Picks `count` indices: whole fronts first, then the most crowded-apart
/// members of the front that does not fit.
pub fn select_survivors(points: &[Vec<f64>], count: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(count);
    for front in nondominated_sort(points) {
        if chosen.len() + front.len() <= count {
            chosen.extend_from_slice(&front);
            if chosen.len() == count {
                break;
            }
            continue;
        }
        let d = crowding_distance(points, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        chosen.extend(order.into_iter().take(count - chosen.len()).map(|k| front[k]));
        break;
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn two_point_example() {
        let pts = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(nondominated_sort(&pts), vec![vec![1], vec![0]]);
    }

    #[test]
    fn mutually_nondominated_is_one_front() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 9.0 - i as f64]).collect();
        assert_eq!(nondominated_sort(&pts).len(), 1);
    }

    /// Brute force: a point is in front k when every point dominating it sits
    /// in an earlier front; peel fronts by scanning all pairs each round.
    fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining.iter().any(|&j| {
                        let mut ge = true;
                        let mut gt = false;
                        for m in 0..points[i].len() {
                            ge &= points[j][m] >= points[i][m];
                            gt |= points[j][m] > points[i][m];
                        }
                        ge && gt
                    })
                })
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng = seeded(21);
        for trial in 0..200 {
            let dims = 2 + trial % 2;
            let pts: Vec<Vec<f64>> = (0..50)
                .map(|_| (0..dims).map(|_| rng.random_range(0..6) as f64).collect())
                .collect();
            assert_eq!(nondominated_sort(&pts), brute_force_fronts(&pts));
        }
    }

    #[test]
    fn crowding_boundaries_are_infinite() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 4.0 - i as f64]).collect();
        let d = crowding_distance(&pts, &[0, 1, 2, 3, 4]);
        assert!(d[0].is_infinite() && d[4].is_infinite());
        assert!((d[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survivors_fill_exactly() {
        let mut rng = seeded(22);
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        for k in [0, 1, 7, 20, 40] {
            let s = select_survivors(&pts, k);
            assert_eq!(s.len(), k);
            let mut u = s.clone();
            u.sort_unstable();
            u.dedup();
            assert_eq!(u.len(), k);
        }
    }
}
