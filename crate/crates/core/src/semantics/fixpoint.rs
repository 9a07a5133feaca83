use super::*;
use crate::sl::Sid;
use itertools::Itertools;

/// One application of the definition transformer to the interpretations
/// currently stored in `m`.
pub fn transformer(m: &HeapStructure, sid: &Sid) -> Result<BTreeMap<String, PredInterp>, SemanticsError> {
    m.validate()?;
    let mut out = BTreeMap::new();
    for def in sid.iter() {
        let mut interp = PredInterp::new();
        let doms = def.params.iter().map(|p| domain(m, p.sort)).collect::<Result<Vec<_>, _>>()?;
        for args in doms.into_iter().multi_cartesian_product_or_unit() {
            let mut env: Env = def.params.iter().map(|p| p.name.clone()).zip(args.iter().copied()).collect();
            for j in 0..def.cases.len() {
                let ys = def.case_exists(j);
                let case = &def.cases[j];
                for eta in Heaplet::all(m.num_locs) {
                    if interp.contains(&(args.clone(), eta)) {
                        continue;
                    }
                    if quantify(m, &mut env, &ys, 0, true, &mut |env| satisfies(m, env, eta, case))? {
                        interp.insert((args.clone(), eta));
                    }
                }
            }
        }
        out.insert(def.name.clone(), interp);
    }
    Ok(out)
}

trait MultiProduct {
    fn multi_cartesian_product_or_unit(self) -> Box<dyn Iterator<Item = Vec<Value>>>;
}

impl<I: Iterator<Item = Vec<Value>> + 'static> MultiProduct for I {
    /// Like `multi_cartesian_product` but yields one empty tuple for zero
    /// factors.
    fn multi_cartesian_product_or_unit(self) -> Box<dyn Iterator<Item = Vec<Value>>> {
        let factors: Vec<Vec<Value>> = self.collect();
        if factors.is_empty() {
            Box::new(std::iter::once(vec![]))
        } else {
            Box::new(factors.into_iter().map(|f| f.into_iter()).multi_cartesian_product())
        }
    }
}

/// Kleene iteration from empty interpretations. Returns the structure with
/// the least fixpoint installed and the number of iterations taken.
pub fn lfp_interpret(base: &HeapStructure, sid: &Sid) -> Result<(HeapStructure, usize), SemanticsError> {
    let mut cur = base.with_preds(sid.iter().map(|d| (d.name.clone(), PredInterp::new())).collect());
    let mut iters = 0;
    loop {
        iters += 1;
        let next = transformer(&cur, sid)?;
        if next == cur.preds {
            return Ok((cur, iters));
        }
        cur.preds = next;
    }
}

pub fn is_fixpoint(m: &HeapStructure, sid: &Sid) -> Result<bool, SemanticsError> {
    for d in sid.iter() {
        if !m.preds.contains_key(&d.name) {
            return Err(SemanticsError::UnknownPredicate(d.name.clone()));
        }
    }
    let next = transformer(m, sid)?;
    Ok(sid.iter().all(|d| next.get(&d.name) == m.preds.get(&d.name)))
}

/// At most one heaplet per predicate tuple.
pub fn is_determined_heap(m: &HeapStructure) -> bool {
    m.preds.values().all(|interp| interp.iter().map(|(args, _)| args).all_unique())
}
