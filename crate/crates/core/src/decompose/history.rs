use crate::decompose::chain::TUPLE_SEPARATOR;
use crate::error::{Error, Result};
use crate::quantum::{AdaptiveSequence, Instrument, Operation};

/// Instruments of one step keyed by the full history `(b_1, ..., b_{k-1})`
/// of earlier outcomes. The first step has the single empty history.
pub type HistoryTable = Vec<(Vec<String>, Instrument)>;

/// Turns a process whose instruments depend on the whole outcome history
/// into an adaptive sequence by enlarging step `k`'s outcome set to
/// `lambda_1 x ... x lambda_k`. Operations on histories that disagree with
/// the selecting prefix are zero.
pub fn lift_history_dependence(raw: &[HistoryTable]) -> Result<AdaptiveSequence> {
    if raw.is_empty() {
        return Err(Error::Invalid("no steps given".into()));
    }
    let mut histories: Vec<Vec<String>> = vec![vec![]];
    let mut steps: Vec<Vec<Instrument>> = Vec::with_capacity(raw.len());
    for (k, table) in raw.iter().enumerate() {
        let picked = histories
            .iter()
            .map(|h| {
                table
                    .iter()
                    .find(|(key, _)| key == h)
                    .map(|(_, ins)| ins)
                    .ok_or_else(|| Error::OutcomeMismatch(format!("step {} has no instrument for history {h:?}", k + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let lambda = picked[0].outcomes().to_vec();
        if picked.iter().any(|ins| ins.outcomes() != lambda.as_slice()) {
            return Err(Error::OutcomeMismatch(format!(
                "step {} instruments have different outcome sets",
                k + 1
            )));
        }
        let extended: Vec<Vec<String>> = histories
            .iter()
            .flat_map(|h| {
                lambda.iter().map(move |b| {
                    let mut e = h.clone();
                    e.push(b.clone());
                    e
                })
            })
            .collect();
        let labels: Vec<String> = extended.iter().map(|e| e.join(&TUPLE_SEPARATOR.to_string())).collect();
        let mut row = Vec::with_capacity(histories.len());
        for (p, ins) in picked.iter().enumerate() {
            let ops = (0..extended.len())
                .map(|idx| {
                    if idx / lambda.len() == p {
                        ins.operations()[idx % lambda.len()].clone()
                    } else {
                        Operation::zero(ins.dim_in(), ins.dim_out())
                    }
                })
                .collect();
            row.push(Instrument::from_operations(labels.clone(), ops)?);
        }
        steps.push(row);
        histories = extended;
    }
    AdaptiveSequence::new(steps)
}
