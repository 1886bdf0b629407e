//! Exact transportation solver (primal network simplex on the bipartite
//! supply/demand graph).
//!
//! The basis is a spanning tree of `rows + cols - 1` cells. Each pivot
//! recomputes node potentials over the tree, prices cells in circular blocks,
//! and pushes flow around the cycle closed by the entering cell. After a long
//! run of degenerate pivots pricing falls back to Bland's rule.

use crate::{Error, Result};

/// Result of an exact transport solve.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    /// `(row, col, flow)` for every cell carrying positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    pub pivots: usize,
}

struct Basis {
    rows: usize,
    cols: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    // adjacency: node -> basic cell ids; rows are nodes 0..rows, cols rows..rows+cols
    adj: Vec<Vec<usize>>,
}

impl Basis {
    fn add(&mut self, r: usize, c: usize, flow: f64) {
        let id = self.cells.len();
        self.cells.push((r, c));
        self.flow.push(flow);
        self.adj[r].push(id);
        self.adj[self.rows + c].push(id);
    }

    fn replace(&mut self, leaving: usize, r: usize, c: usize, flow: f64) {
        let (lr, lc) = self.cells[leaving];
        let rows = self.rows;
        self.adj[lr].retain(|&x| x != leaving);
        self.adj[rows + lc].retain(|&x| x != leaving);
        self.cells[leaving] = (r, c);
        self.flow[leaving] = flow;
        self.adj[r].push(leaving);
        self.adj[rows + c].push(leaving);
    }
}

/// Minimum-cost transport between `supply` and `demand` with row-major
/// `rows x cols` cost matrix. Masses must be nonnegative with equal totals
/// (within 1e-9 relative).
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (n1, n2) = (supply.len(), demand.len());
    if cost.len() != n1 * n2 {
        return Err(Error::invalid("cost matrix shape does not match the masses"));
    }
    if supply.iter().chain(demand).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("transport masses must be finite and nonnegative"));
    }
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (sa - sb).abs() > 1e-9 * sa.max(sb).max(1.0) {
        return Err(Error::invalid(format!("unbalanced transport: {sa} vs {sb}")));
    }

    // Only bins carrying mass take part.
    let rows: Vec<usize> = (0..n1).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n2).filter(|&j| demand[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Ok(TransportPlan {
            cost: 0.0,
            flows: Vec::new(),
            pivots: 0,
        });
    }
    let c = cols.len();
    let sub_cost: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * n2 + j]))
        .collect();
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let mut b: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
    // Rescale demand so the totals agree to rounding.
    let scale = a.iter().sum::<f64>() / b.iter().sum::<f64>();
    for v in &mut b {
        *v *= scale;
    }

    let mut basis = northwest_corner(&a, &b);
    let pivots = network_simplex(&mut basis, &sub_cost)?;

    let mut total = 0.0;
    let mut flows = Vec::new();
    for (id, &(i, j)) in basis.cells.iter().enumerate() {
        let f = basis.flow[id];
        if f > 0.0 {
            total += f * sub_cost[i * c + j];
            flows.push((rows[i], cols[j], f));
        }
    }
    flows.sort_by_key(|x| (x.0, x.1));
    Ok(TransportPlan {
        cost: total,
        flows,
        pivots,
    })
}

fn northwest_corner(a: &[f64], b: &[f64]) -> Basis {
    let (n1, n2) = (a.len(), b.len());
    let mut basis = Basis {
        rows: n1,
        cols: n2,
        cells: Vec::with_capacity(n1 + n2 - 1),
        flow: Vec::with_capacity(n1 + n2 - 1),
        adj: vec![Vec::new(); n1 + n2],
    };
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = ra[i].min(rb[j]).max(0.0);
        basis.add(i, j, x);
        ra[i] -= x;
        rb[j] -= x;
        if i == n1 - 1 && j == n2 - 1 {
            break;
        }
        if j == n2 - 1 || (i < n1 - 1 && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

fn network_simplex(basis: &mut Basis, cost: &[f64]) -> Result<usize> {
    let (n1, n2) = (basis.rows, basis.cols);
    let nodes = n1 + n2;
    let n_cells = n1 * n2;
    let max_cost = cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * (1.0 + max_cost);
    let block = ((n_cells as f64).sqrt().ceil() as usize).max(16).min(n_cells);
    let degenerate_limit = 10 * nodes;
    let max_pivots = 50 * n_cells + 1000;

    let mut potential = vec![0.0; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut stack = Vec::with_capacity(nodes);
    let mut cursor = 0usize;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;

    loop {
        // potentials: u_row + v_col = cost on basic cells, node 0 at zero
        parent.fill(usize::MAX);
        parent[0] = 0;
        potential[0] = 0.0;
        depth[0] = 0;
        stack.clear();
        stack.push(0);
        while let Some(x) = stack.pop() {
            for &id in &basis.adj[x] {
                let (r, c) = basis.cells[id];
                let y = if x < n1 { n1 + c } else { r };
                if parent[y] != usize::MAX {
                    continue;
                }
                parent[y] = x;
                parent_cell[y] = id;
                depth[y] = depth[x] + 1;
                potential[y] = cost[r * n2 + c] - potential[x];
                stack.push(y);
            }
        }
        if parent.contains(&usize::MAX) {
            return Err(Error::Numerical("transport basis is not a spanning tree".into()));
        }

        let reduced = |cell: usize| {
            let (r, c) = (cell / n2, cell % n2);
            cost[cell] - potential[r] - potential[n1 + c]
        };
        let bland = degenerate_run > degenerate_limit;
        let mut entering = None;
        if bland {
            entering = (0..n_cells).find(|&cell| reduced(cell) < -tol);
        } else {
            let mut best = -tol;
            let mut scanned = 0;
            while scanned < n_cells {
                let end = (scanned + block).min(n_cells);
                for _ in scanned..end {
                    let rc = reduced(cursor);
                    if rc < best {
                        best = rc;
                        entering = Some(cursor);
                    }
                    cursor += 1;
                    if cursor == n_cells {
                        cursor = 0;
                    }
                }
                scanned = end;
                if entering.is_some() {
                    break;
                }
            }
        }
        let Some(cell) = entering else {
            return Ok(pivots);
        };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numerical(format!(
                "network simplex exceeded {max_pivots} pivots"
            )));
        }

        // Cycle: entering (row -> col) is +, then walk the tree path from
        // the col node back to the row node. A cell crossed while leaving a
        // col node toward a row node is -, the other direction +.
        let (er, ec) = (cell / n2, cell % n2);
        let (mut x, mut y) = (n1 + ec, er);
        let mut cycle: Vec<(usize, bool)> = Vec::new();
        let mut row_side: Vec<(usize, bool)> = Vec::new();
        while x != y {
            if depth[x] >= depth[y] {
                // traversed child -> parent
                cycle.push((parent_cell[x], x >= n1));
                x = parent[x];
            } else {
                // traversed parent -> child; the parent is a col node iff the child is a row
                row_side.push((parent_cell[y], y < n1));
                y = parent[y];
            }
        }
        cycle.extend(row_side.into_iter().rev());
        let ordered = cycle;

        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &(id, is_minus) in &ordered {
            if !is_minus {
                continue;
            }
            let f = basis.flow[id];
            let better = if bland {
                f < theta || (f == theta && id < leaving)
            } else {
                f < theta
            };
            if better {
                theta = f;
                leaving = id;
            }
        }
        if leaving == usize::MAX {
            return Err(Error::Numerical("unbounded transport cycle".into()));
        }
        let theta = theta.max(0.0);
        if theta == 0.0 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        for &(id, is_minus) in &ordered {
            if is_minus {
                basis.flow[id] = (basis.flow[id] - theta).max(0.0);
            } else {
                basis.flow[id] += theta;
            }
        }
        basis.flow[leaving] = 0.0;
        basis.replace(leaving, er, ec, theta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_transport_is_free() {
        let a = [0.2, 0.3, 0.5];
        let cost = [0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
        let plan = solve_transport(&a, &a, &cost).unwrap();
        assert!(plan.cost.abs() < 1e-15);
    }

    #[test]
    fn single_route() {
        let plan = solve_transport(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(plan.cost, 2.0);
        assert_eq!(plan.flows, vec![(0, 1, 1.0)]);
    }

    #[test]
    fn line_transport_matches_cdf_formula() {
        // On a line with |i - j| cost, EMD = sum |F - G| over bins.
        let f = [0.1, 0.4, 0.0, 0.2, 0.3];
        let g = [0.3, 0.0, 0.3, 0.3, 0.1];
        let cost: Vec<f64> = (0..25).map(|x| ((x / 5) as f64 - (x % 5) as f64).abs()).collect();
        let plan = solve_transport(&f, &g, &cost).unwrap();
        let (mut cf, mut cg, mut expect) = (0.0, 0.0, 0.0);
        for i in 0..5 {
            cf += f[i];
            cg += g[i];
            expect += (cf - cg).abs();
        }
        assert!((plan.cost - expect).abs() < 1e-12, "{} vs {expect}", plan.cost);
        let shipped: f64 = plan.flows.iter().map(|x| x.2).sum();
        assert!((shipped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(solve_transport(&[1.0], &[0.5], &[0.0]).is_err());
    }
}
