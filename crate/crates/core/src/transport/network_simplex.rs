//! Primal network simplex for transport between two weighted point clouds.
//! Spanning-tree bookkeeping follows the classic thread/successor
//! representation with block-search pricing. Flows are integers (masses
//! scaled by 2^50) so degenerate pivots cannot drift; costs and potentials
//! are f64 and arc costs are recomputed from coordinates.
//!
//! The simplex runs on a sparse set of candidate arcs (nearest neighbours in
//! both directions). After each solve every arc of the complete bipartite
//! graph is priced; violating arcs are added and the simplex resumes from the
//! current tree. The final pass certifies optimality over all arcs.

use super::{sq_dist, PlanEntry};
use crate::error::{Error, Result};
use crate::numerics::KahanSum;

const TOTAL_UNITS: i64 = 1 << 50;
const NONE: usize = usize::MAX;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;

/// Solution of a discrete transport problem between two weighted clouds.
#[derive(Debug, Clone)]
pub struct DiscreteTransport {
    /// Σ mass·|x−y|² of the returned plan (squared W2 of the plan).
    pub cost_sq: f64,
    pub plan: Vec<PlanEntry>,
    /// Total-variation distance introduced by rounding both marginals to
    /// integer units (sum over the two sides).
    pub rounding_tv: f64,
    /// Upper bound on cost_sq minus the optimum of the rounded problem,
    /// from the most negative reduced cost at termination.
    pub duality_gap: f64,
    pub pivots: usize,
}

impl DiscreteTransport {
    /// Certified additive slack on W2 covering marginal rounding and the
    /// duality gap, given the diameter of the union of supports.
    pub fn w2_slack(&self, diameter: f64) -> f64 {
        let w = self.cost_sq.max(0.0).sqrt();
        let gap = w - (self.cost_sq - self.duality_gap).max(0.0).sqrt();
        gap + 2.0 * diameter * self.rounding_tv.sqrt()
    }
}

/// Largest-remainder rounding of probability weights to integer units
/// summing exactly to `total`. Returns the units and the TV error.
fn round_weights(w: &[f64], total: i64) -> (Vec<i64>, f64) {
    let sum: f64 = w.iter().sum();
    let scaled: Vec<f64> = w.iter().map(|x| x / sum * total as f64).collect();
    let mut units: Vec<i64> = scaled.iter().map(|x| x.floor() as i64).collect();
    let mut deficit = total - units.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut k = 0;
    while deficit > 0 {
        units[order[k % order.len()]] += 1;
        deficit -= 1;
        k += 1;
    }
    while deficit < 0 {
        let i = order[order.len() - 1 - (k % order.len())];
        if units[i] > 0 {
            units[i] -= 1;
            deficit += 1;
        }
        k += 1;
    }
    let tv = 0.5
        * w.iter()
            .zip(&units)
            .map(|(x, &u)| (x / sum - u as f64 / total as f64).abs())
            .sum::<f64>();
    (units, tv)
}

struct Simplex<'a> {
    dim: usize,
    src: &'a [f64],
    dst: &'a [f64],
    n_src: usize,
    n_dst: usize,
    node_num: usize,
    root: usize,
    // Real arc r has id node_num + r; ids below node_num are the artificial
    // arcs joining each node to the root.
    arc_src: Vec<u32>,
    arc_dst: Vec<u32>,
    supply: Vec<i64>,
    art_cost: f64,
    eps: f64,

    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    pflow: Vec<i64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pi: Vec<f64>,
    state: Vec<i8>,
    dirty_revs: Vec<usize>,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
    next_arc: usize,
    block_size: usize,
}

impl<'a> Simplex<'a> {
    #[inline]
    fn source(&self, e: usize) -> usize {
        if e >= self.node_num {
            self.arc_src[e - self.node_num] as usize
        } else if self.supply[e] >= 0 {
            e
        } else {
            self.root
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        if e >= self.node_num {
            self.n_src + self.arc_dst[e - self.node_num] as usize
        } else if self.supply[e] >= 0 {
            self.root
        } else {
            e
        }
    }

    #[inline]
    fn real_cost(&self, s: usize, t: usize) -> f64 {
        let d = self.dim;
        sq_dist(&self.src[s * d..(s + 1) * d], &self.dst[t * d..(t + 1) * d])
    }

    #[inline]
    fn cost(&self, e: usize) -> f64 {
        if e >= self.node_num {
            let r = e - self.node_num;
            self.real_cost(self.arc_src[r] as usize, self.arc_dst[r] as usize)
        } else if self.supply[e] >= 0 {
            0.0
        } else {
            self.art_cost
        }
    }

    fn new(dim: usize, src: &'a [f64], su: &[i64], dst: &'a [f64], du: &[i64], diam2: f64) -> Self {
        let n_src = su.len();
        let n_dst = du.len();
        let node_num = n_src + n_dst;
        let root = node_num;
        let mut supply: Vec<i64> = su.iter().copied().chain(du.iter().map(|d| -d)).collect();
        supply.push(0);
        let art_cost = (diam2 + 1.0) * node_num as f64;
        let mut s = Self {
            dim,
            src,
            dst,
            n_src,
            n_dst,
            node_num,
            root,
            arc_src: Vec::new(),
            arc_dst: Vec::new(),
            supply,
            art_cost,
            eps: 1e-14 * art_cost,
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            pred_dir: vec![0; node_num + 1],
            pflow: vec![0; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![0; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pi: vec![0.0; node_num + 1],
            state: Vec::new(),
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
            next_arc: 0,
            block_size: 10,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        for u in 0..node_num {
            s.parent[u] = root;
            s.pred[u] = u;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            if s.supply[u] >= 0 {
                s.pred_dir[u] = 1;
                s.pi[u] = 0.0;
                s.pflow[u] = s.supply[u];
            } else {
                s.pred_dir[u] = -1;
                s.pi[u] = art_cost;
                s.pflow[u] = -s.supply[u];
            }
        }
        s
    }

    fn add_arcs(&mut self, arcs: &[(u32, u32)]) {
        for &(s, t) in arcs {
            self.arc_src.push(s);
            self.arc_dst.push(t);
            self.state.push(STATE_LOWER);
        }
        self.block_size = ((self.state.len() as f64).sqrt() as usize).max(10);
        self.next_arc = 0;
    }

    #[inline]
    fn reduced(&self, r: usize) -> f64 {
        let s = self.arc_src[r] as usize;
        let t = self.arc_dst[r] as usize;
        self.real_cost(s, t) + self.pi[s] - self.pi[self.n_src + t]
    }

    fn find_entering_arc(&mut self) -> bool {
        let arcs = self.state.len();
        let mut min = -self.eps;
        let mut found = NONE;
        let mut cnt = self.block_size;
        let start = self.next_arc;
        for pass in 0..2 {
            let (lo, hi) = if pass == 0 { (start, arcs) } else { (0, start) };
            for r in lo..hi {
                if self.state[r] == STATE_LOWER {
                    let c = self.reduced(r);
                    if c < min {
                        min = c;
                        found = r;
                    }
                }
                cnt -= 1;
                if cnt == 0 {
                    if found != NONE {
                        self.in_arc = self.node_num + found;
                        self.next_arc = (r + 1) % arcs;
                        return true;
                    }
                    cnt = self.block_size;
                }
            }
        }
        if found == NONE {
            return false;
        }
        self.in_arc = self.node_num + found;
        self.next_arc = start;
        true
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        // Entering arcs are always at their lower bound.
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        self.delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == 1 {
                let d = self.pflow[u];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == -1 {
                let d = self.pflow[u];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0 {
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.pflow[u] -= self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.pflow[u] += self.pred_dir[u] as i64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc - self.node_num] = STATE_TREE;
        let out = self.pred[self.u_out];
        if out >= self.node_num {
            self.state[out - self.node_num] = STATE_LOWER;
        }
    }

    fn update_tree_structure(&mut self) {
        let in_flow = self.delta;
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir: i8 = if u_in == self.source(self.in_arc) { 1 } else { -1 };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pflow[u_in] = in_flow;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                self.pflow[u] = self.pflow[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pflow[u_in] = in_flow;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in] - self.pi[self.u_in]
            - self.pred_dir[self.u_in] as f64 * self.cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self, max_pivots: usize) -> Result<usize> {
        let mut pivots = 0;
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::Convergence("transport problem reported unbounded".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Convergence(format!("network simplex exceeded {max_pivots} pivots")));
            }
        }
        Ok(pivots)
    }
}

/// Nearest-neighbour arcs: each source to its closest targets (enough to
/// carry several times its share of mass) and each target to its closest
/// sources.
fn candidate_arcs(dim: usize, src: &[f64], dst: &[f64]) -> Vec<(u32, u32)> {
    let ns = src.len() / dim;
    let nd = dst.len() / dim;
    let per_src = (4 * nd.div_ceil(ns)).max(8).min(nd);
    let per_dst = 4.min(ns);
    let mut arcs = Vec::with_capacity(ns * per_src + nd * per_dst);
    let mut buf: Vec<(f64, u32)> = Vec::with_capacity(nd.max(ns));
    for s in 0..ns {
        buf.clear();
        let x = &src[s * dim..(s + 1) * dim];
        buf.extend((0..nd).map(|t| (sq_dist(x, &dst[t * dim..(t + 1) * dim]), t as u32)));
        if per_src < nd {
            buf.select_nth_unstable_by(per_src, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        arcs.extend(buf[..per_src].iter().map(|&(_, t)| (s as u32, t)));
    }
    for t in 0..nd {
        buf.clear();
        let y = &dst[t * dim..(t + 1) * dim];
        buf.extend((0..ns).map(|s| (sq_dist(&src[s * dim..(s + 1) * dim], y), s as u32)));
        if per_dst < ns {
            buf.select_nth_unstable_by(per_dst, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        arcs.extend(buf[..per_dst].iter().map(|&(_, s)| (s, t as u32)));
    }
    arcs.sort_unstable();
    arcs.dedup();
    arcs
}

/// Exact transport between two weighted clouds (flat coordinates of the
/// given dimension). Weights need not be normalized; each side is rescaled
/// to unit mass.
pub fn w2_discrete(
    dim: usize,
    src: &[f64],
    src_w: &[f64],
    dst: &[f64],
    dst_w: &[f64],
) -> Result<DiscreteTransport> {
    if src.len() != dim * src_w.len() || dst.len() != dim * dst_w.len() {
        return Err(Error::InvalidParameter("coordinate and weight lengths disagree".into()));
    }
    if src_w.is_empty() || dst_w.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    if src_w.iter().chain(dst_w).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    // Drop zero-weight atoms; keep a map back to caller indices.
    let keep = |w: &[f64]| -> Vec<usize> { (0..w.len()).filter(|&i| w[i] > 0.0).collect() };
    let si = keep(src_w);
    let di = keep(dst_w);
    if si.is_empty() || di.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    let gather = |pts: &[f64], idx: &[usize]| -> Vec<f64> {
        idx.iter().flat_map(|&i| pts[i * dim..(i + 1) * dim].iter().copied()).collect()
    };
    let sp = gather(src, &si);
    let dp = gather(dst, &di);
    let sw: Vec<f64> = si.iter().map(|&i| src_w[i]).collect();
    let dw: Vec<f64> = di.iter().map(|&i| dst_w[i]).collect();

    let uniform_src = sw.iter().all(|w| *w == sw[0]);
    let (su, tv_src, total) = if uniform_src {
        let per = TOTAL_UNITS / sw.len() as i64;
        (vec![per; sw.len()], 0.0, per * sw.len() as i64)
    } else {
        let (u, tv) = round_weights(&sw, TOTAL_UNITS);
        (u, tv, TOTAL_UNITS)
    };
    let (du, tv_dst) = round_weights(&dw, total);

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in sp.chunks_exact(dim).chain(dp.chunks_exact(dim)) {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diam2: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum();

    let mut sx = Simplex::new(dim, &sp, &su, &dp, &du, diam2);
    let (ns, nd) = (sx.n_src, sx.n_dst);
    let mut present = vec![false; ns * nd];
    let initial = candidate_arcs(dim, &sp, &dp);
    for &(s, t) in &initial {
        present[s as usize * nd + t as usize] = true;
    }
    sx.add_arcs(&initial);
    let max_pivots = 50 * (sx.node_num + 10) * (sx.node_num + 10).ilog2() as usize + 1_000_000;
    let mut pivots = 0;
    let min_reduced = loop {
        pivots += sx.run(max_pivots)?;
        // Price every arc of the complete graph.
        let mut min_reduced = 0.0f64;
        let mut violating = Vec::new();
        for s in 0..ns {
            let ps = sx.pi[s];
            for t in 0..nd {
                let r = sx.real_cost(s, t) + ps - sx.pi[ns + t];
                if r < min_reduced {
                    min_reduced = r;
                }
                if r < -sx.eps && !present[s * nd + t] {
                    violating.push((r, s as u32, t as u32));
                }
            }
        }
        if violating.is_empty() {
            break min_reduced;
        }
        // Keep the most negative arcs, at most a few per node.
        let cap = 4 * sx.node_num;
        if violating.len() > cap {
            violating.select_nth_unstable_by(cap, |a, b| a.0.total_cmp(&b.0));
            violating.truncate(cap);
        }
        violating.sort_by_key(|v| (v.1, v.2));
        let added: Vec<(u32, u32)> = violating.iter().map(|v| (v.1, v.2)).collect();
        for &(s, t) in &added {
            present[s as usize * nd + t as usize] = true;
        }
        sx.add_arcs(&added);
    };

    for u in 0..sx.node_num {
        if sx.pred[u] < sx.node_num && sx.pflow[u] != 0 {
            return Err(Error::Convergence("infeasible flow left on an artificial arc".into()));
        }
    }
    let inv_total = 1.0 / total as f64;
    let mut plan = Vec::new();
    let mut cost = KahanSum::new();
    let mut out_src = vec![0i64; sx.n_src];
    let mut in_dst = vec![0i64; sx.n_dst];
    for u in 0..sx.node_num {
        let e = sx.pred[u];
        if e >= sx.node_num && sx.pflow[u] > 0 {
            let r = e - sx.node_num;
            let (s, t) = (sx.arc_src[r] as usize, sx.arc_dst[r] as usize);
            out_src[s] += sx.pflow[u];
            in_dst[t] += sx.pflow[u];
            let mass = sx.pflow[u] as f64 * inv_total;
            cost.add(mass * sx.real_cost(s, t));
            plan.push(PlanEntry { src: si[s], dst: di[t], mass });
        }
    }
    if out_src != su || in_dst != du {
        return Err(Error::Convergence("plan marginals do not match the supplies".into()));
    }
    plan.sort_by_key(|e| (e.src, e.dst));
    Ok(DiscreteTransport {
        cost_sq: cost.value(),
        plan,
        rounding_tv: tv_src + tv_dst,
        duality_gap: -min_reduced,
        pivots,
    })
}
