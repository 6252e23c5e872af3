//! Line-delimited JSON dumps of plans and codewords.
//!
//! Each line is one transmission:
//!
//! ```text
//! {"index":0,"subset":[0,1,2],"groups":[{"users":[0,1],
//!   "subpackets":[{"user":0,"subset":[1],"index":0},{"user":1,"subset":[0],"index":0}],
//!   "bits":16,"payload_hex":"a13f"}, ...]}
//! ```
//!
//! `bits` and `payload_hex` are present only in codeword dumps. Payload bytes
//! are MSB-first; the final byte is zero-padded when `bits` is not a multiple of 8.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::combinatorics::UserSet;
use crate::error::{Error, Result};

use super::{CodewordSet, DeliveryPlan, SubpacketRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub index: usize,
    pub subset: UserSet,
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub users: UserSet,
    pub subpackets: Vec<SubpacketRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_hex: Option<String>,
}

fn records(plan: &DeliveryPlan, codewords: Option<&CodewordSet>) -> Vec<TransmissionRecord> {
    plan.transmissions
        .iter()
        .map(|tx| TransmissionRecord {
            index: tx.index,
            subset: tx.users,
            groups: tx
                .groups
                .iter()
                .map(|g| {
                    let cw = codewords.and_then(|cs| {
                        cs.codewords
                            .iter()
                            .find(|c| c.transmission == tx.index && c.group == g.users)
                    });
                    GroupRecord {
                        users: g.users,
                        subpackets: g.subpackets.clone(),
                        bits: cw.map(|c| c.payload.len()),
                        payload_hex: cw.map(|c| hex::encode(c.payload.as_raw_slice())),
                    }
                })
                .collect(),
        })
        .collect()
}

fn write_records<W: Write>(recs: &[TransmissionRecord], mut out: W) -> Result<()> {
    for r in recs {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_plan_dump<W: Write>(plan: &DeliveryPlan, out: W) -> Result<()> {
    write_records(&records(plan, None), out)
}

pub fn write_codeword_dump<W: Write>(
    plan: &DeliveryPlan,
    codewords: &CodewordSet,
    out: W,
) -> Result<()> {
    write_records(&records(plan, Some(codewords)), out)
}

pub fn read_plan_dump<R: BufRead>(input: R) -> Result<Vec<TransmissionRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::Input(format!("dump line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}
