//! Rate-exchange protocols between BS agents, with exact bit ledgers.
//!
//! Each BS computes the rates of its own interference-free users for every
//! candidate it takes part in, quantizes them, and ships them to the decider.
//! BS index 0 decides in the centralized protocol; in the decentralized one
//! every BS decides from the same table.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::beamforming::{local_rate_terms, LocalRate, Selection};
use crate::channel::{ChannelRealization, UserId};
use crate::quantization::{dequantize, quantize, CodebookSet};
use crate::selection::{binomial, choose_selection, enumerate_candidates, CandidateSet, RateTable};
use crate::{Error, Result};

/// Bits per entry when rates travel unquantized.
pub const EXACT_RATE_BITS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    QuantizedRates,
    SelectionIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub from: usize,
    pub to: usize,
    pub payload_kind: PayloadKind,
    pub bits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitLedger {
    messages: Vec<MessageRecord>,
    total_bits: u64,
}

impl BitLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, message: MessageRecord) -> Result<()> {
        if message.bits == 0 {
            return Err(Error::InvalidArgument(format!(
                "empty message from BS {} to BS {}",
                message.from, message.to
            )));
        }
        self.total_bits += message.bits;
        self.messages.push(message);
        Ok(())
    }

    pub fn messages(&self) -> &[MessageRecord] {
        &self.messages
    }

    pub fn total_bits(&self) -> u64 {
        self.total_bits
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_bits.div_ceil(8)
    }

    /// One JSON object per message, in send order.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_trace(text: &str) -> Result<Self> {
        let mut ledger = Self::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            ledger.record(serde_json::from_str(line)?)?;
        }
        Ok(ledger)
    }
}

/// How exchanged rates are encoded.
#[derive(Debug, Clone, Copy)]
pub enum RateCodec<'a> {
    /// Full-precision values; the limit `n_f → ∞`.
    Exact,
    Quantized(&'a CodebookSet),
}

impl RateCodec<'_> {
    fn bits_per_entry(&self) -> u64 {
        match self {
            RateCodec::Exact => EXACT_RATE_BITS,
            RateCodec::Quantized(set) => set.n_f as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Rates(Vec<LocalRate>),
    SelectionIndex(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Message {
    from: usize,
    to: usize,
    payload: Payload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub chosen: Selection,
    pub ledger: BitLedger,
    /// The table each decider scored (one for centralized, `N_C` otherwise).
    pub tables: Vec<RateTable>,
    /// What every BS ended up using, indexed by BS.
    pub per_bs_choice: Vec<Selection>,
}

/// `ceil(log₂ x)` for `x ≥ 1`.
pub fn ceil_log2(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// Bits of the winning-candidate index, `ceil(log₂ Σ_{α=1}^{N_T} C(N_C, α))`.
pub fn index_bits(n_t: usize, n_c: usize) -> u32 {
    ceil_log2((1..=n_t).map(|a| binomial(n_c, a)).sum())
}

/// `S_central = (N_C − 1)·(N_f + ceil(log₂ Σ C(N_C, α)))`.
pub fn s_central(n_t: usize, n_c: usize, n_f_total: u64) -> u64 {
    (n_c as u64 - 1) * (n_f_total + index_bits(n_t, n_c) as u64)
}

/// `S_decentral = (N_C − 1)·N_f + (N_C − 1)²·N_f`.
pub fn s_decentral(n_c: usize, n_f_total: u64) -> u64 {
    let m = n_c as u64 - 1;
    m * n_f_total + m * m * n_f_total
}

struct Agent<'a> {
    bs: usize,
    realization: &'a ChannelRealization,
    candidates: &'a CandidateSet,
    inbox: Vec<Message>,
    choice: Option<Selection>,
}

impl<'a> Agent<'a> {
    /// This BS's rate entries, already passed through the codec.
    fn report(&self, codec: RateCodec<'_>) -> Result<Vec<LocalRate>> {
        let local = self.realization.local_csi(self.bs)?;
        let mine = self.candidates.involving(self.bs);
        let mut out = local_rate_terms(&local, &mine)?;
        if let RateCodec::Quantized(set) = codec {
            for entry in &mut out {
                let book = set.get(self.candidates.candidates[entry.candidate].alpha())?;
                entry.rate = dequantize(quantize(entry.rate, book), book)?;
            }
        }
        Ok(out)
    }

    fn decide(&mut self, own: &[LocalRate]) -> Result<(RateTable, Selection)> {
        let mut table = RateTable::new(self.candidates);
        let received = self.inbox.iter().filter_map(|m| match &m.payload {
            Payload::Rates(r) => Some(r.as_slice()),
            Payload::SelectionIndex(_) => None,
        });
        for entries in std::iter::once(own).chain(received) {
            for e in entries {
                table.set(e.candidate, e.user, e.rate)?;
            }
        }
        let chosen = choose_selection(self.candidates, &table, self.realization.config())?;
        self.choice = Some(chosen.clone());
        Ok((table, chosen))
    }
}

struct Network<'a> {
    agents: Vec<Agent<'a>>,
    in_flight: VecDeque<Message>,
    ledger: BitLedger,
    entry_bits: u64,
    index_bits: u64,
}

impl<'a> Network<'a> {
    fn new(realization: &'a ChannelRealization, candidates: &'a CandidateSet, codec: RateCodec<'_>) -> Result<Self> {
        let cfg = realization.config();
        cfg.require_selection_scheme()?;
        let agents = (0..cfg.n_c)
            .map(|bs| Agent { bs, realization, candidates, inbox: Vec::new(), choice: None })
            .collect();
        let n_k = crate::selection::total_selection_count(cfg);
        Ok(Self {
            agents,
            in_flight: VecDeque::new(),
            ledger: BitLedger::new(),
            entry_bits: codec.bits_per_entry(),
            index_bits: ceil_log2(n_k).max(1) as u64,
        })
    }

    fn send(&mut self, message: Message) -> Result<()> {
        if matches!(&message.payload, Payload::Rates(r) if r.is_empty()) {
            return Ok(());
        }
        let (kind, bits) = match &message.payload {
            Payload::Rates(r) => (PayloadKind::QuantizedRates, r.len() as u64 * self.entry_bits),
            Payload::SelectionIndex(_) => (PayloadKind::SelectionIndex, self.index_bits),
        };
        self.ledger.record(MessageRecord { from: message.from, to: message.to, payload_kind: kind, bits })?;
        self.in_flight.push_back(message);
        Ok(())
    }

    fn deliver_all(&mut self) {
        while let Some(m) = self.in_flight.pop_front() {
            self.agents[m.to].inbox.push(m);
        }
    }
}

fn candidates_for(realization: &ChannelRealization, alphas: &[usize]) -> Result<CandidateSet> {
    realization.config().require_selection_scheme()?;
    enumerate_candidates(realization.config(), alphas)
}

/// BS 0 collects every other BS's rates, picks `c*`, and sends its index back.
pub fn run_centralized(realization: &ChannelRealization, alphas: &[usize], codec: RateCodec<'_>) -> Result<ProtocolOutcome> {
    let candidates = candidates_for(realization, alphas)?;
    let mut net = Network::new(realization, &candidates, codec)?;
    let n_c = net.agents.len();
    let mut own = Vec::new();
    for bs in 0..n_c {
        let report = net.agents[bs].report(codec)?;
        if bs == 0 {
            own = report;
        } else {
            net.send(Message { from: bs, to: 0, payload: Payload::Rates(report) })?;
        }
    }
    net.deliver_all();
    let (table, chosen) = net.agents[0].decide(&own)?;
    for bs in 1..n_c {
        net.send(Message { from: 0, to: bs, payload: Payload::SelectionIndex(chosen.candidate) })?;
    }
    net.deliver_all();
    for agent in net.agents.iter_mut().skip(1) {
        let index = agent
            .inbox
            .iter()
            .find_map(|m| match m.payload {
                Payload::SelectionIndex(i) => Some(i),
                Payload::Rates(_) => None,
            })
            .ok_or(Error::InvalidArgument(format!("BS {} never heard the decision", agent.bs)))?;
        agent.choice = candidates.get(index).cloned();
    }
    finish(net, chosen, vec![table])
}

/// Every BS broadcasts its rates to all peers and decides on its own.
pub fn run_decentralized(realization: &ChannelRealization, alphas: &[usize], codec: RateCodec<'_>) -> Result<ProtocolOutcome> {
    let candidates = candidates_for(realization, alphas)?;
    let mut net = Network::new(realization, &candidates, codec)?;
    let n_c = net.agents.len();
    let mut reports = Vec::with_capacity(n_c);
    for bs in 0..n_c {
        reports.push(net.agents[bs].report(codec)?);
    }
    for (bs, report) in reports.iter().enumerate() {
        for to in (0..n_c).filter(|&t| t != bs) {
            net.send(Message { from: bs, to, payload: Payload::Rates(report.clone()) })?;
        }
    }
    net.deliver_all();
    let mut tables = Vec::with_capacity(n_c);
    let mut choices = Vec::with_capacity(n_c);
    for (bs, own) in reports.iter().enumerate() {
        let agent = &mut net.agents[bs];
        let (table, chosen) = agent.decide(own)?;
        tables.push(table);
        choices.push(chosen);
    }
    if choices.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidArgument("decentralized deciders disagree".into()));
    }
    let chosen = choices[0].clone();
    finish(net, chosen, tables)
}

fn finish(net: Network<'_>, chosen: Selection, tables: Vec<RateTable>) -> Result<ProtocolOutcome> {
    let per_bs_choice = net
        .agents
        .into_iter()
        .map(|a| a.choice.ok_or(Error::InvalidArgument(format!("BS {} has no decision", a.bs))))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProtocolOutcome { chosen, ledger: net.ledger, tables, per_bs_choice })
}

/// Number of rate entries BS `bs` sends (`M`).
pub fn entries_per_bs(candidates: &CandidateSet, bs: usize) -> u64 {
    candidates
        .candidates
        .iter()
        .map(|s| s.free().iter().filter(|u: &&UserId| u.cell == bs).count() as u64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum AccountingScheme {
    /// Centralized proposed scheme; `n_f_total` is `N_f = M·n_f`.
    Proposed { n_t: usize, n_c: usize, n_f_total: u64 },
    ProposedDecentral { n_c: usize, n_f_total: u64 },
    Wmmse { kappa: u64, n_f: u64, n_c: usize },
    Global { n_f: u64, n_c: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    pub bits: u64,
    pub bytes: u64,
}

/// Closed-form information-exchange amounts of each scheme.
pub fn accounting_table(scheme: AccountingScheme) -> Result<Accounting> {
    let bits = match scheme {
        AccountingScheme::Proposed { n_t, n_c, n_f_total } => {
            if n_t == 0 || n_c < 2 || n_f_total == 0 {
                return Err(Error::InvalidArgument(format!("{scheme:?}")));
            }
            s_central(n_t, n_c, n_f_total)
        }
        AccountingScheme::ProposedDecentral { n_c, n_f_total } => {
            if n_c < 2 || n_f_total == 0 {
                return Err(Error::InvalidArgument(format!("{scheme:?}")));
            }
            s_decentral(n_c, n_f_total)
        }
        AccountingScheme::Wmmse { kappa, n_f, n_c } => {
            if kappa == 0 || n_f == 0 || n_c == 0 {
                return Err(Error::InvalidArgument(format!("{scheme:?}")));
            }
            3 * kappa * n_f * (n_c * n_c) as u64
        }
        AccountingScheme::Global { n_f, n_c } => {
            if n_f == 0 || n_c < 2 {
                return Err(Error::InvalidArgument(format!("{scheme:?}")));
            }
            n_f * (n_c * n_c) as u64 * (n_c as u64 - 1)
        }
    };
    Ok(Accounting { bits, bytes: bits.div_ceil(8) })
}
