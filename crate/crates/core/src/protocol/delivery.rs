// SPDX-License-Identifier: Apache-2.0
//! Record of which parameter and message kinds each role received.

use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    TrustAuthority,
    ServiceProvider,
    Rsu(u32),
    Customer(u32),
    Processor(u32),
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::TrustAuthority => f.write_str("TA"),
            Role::ServiceProvider => f.write_str("SP"),
            Role::Rsu(i) => write!(f, "RSU{i}"),
            Role::Customer(i) => write!(f, "customer{i}"),
            Role::Processor(i) => write!(f, "processor{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    GroupParams,
    /// `n` alone.
    PaillierModulus,
    /// `(n, g)`.
    PaillierPublicKey,
    /// `(λ, μ)`.
    PaillierSecretKey,
    /// `χ`.
    EpochSecret,
    /// `k0`.
    PseudonymKey,
    PseudonymBundle,
    TrustToken,
    RsuKeypair,
    RsuPublicKeys,
    TaskAnnouncement,
    HandshakeResponse,
    ProcessorReport,
    CustomerReport,
    AggregatedReport,
    TrustQualities,
}

impl Role {
    /// Whether the distribution list allows this role to hold `item`.
    pub fn may_receive(self, item: Item) -> bool {
        use Item::*;
        match self {
            Role::TrustAuthority => true,
            Role::ServiceProvider => matches!(
                item,
                GroupParams | PaillierPublicKey | PaillierSecretKey | RsuPublicKeys | AggregatedReport
            ),
            Role::Rsu(_) => matches!(
                item,
                GroupParams | PaillierPublicKey | EpochSecret | RsuKeypair | ProcessorReport | CustomerReport
            ),
            Role::Customer(_) => matches!(
                item,
                GroupParams | PaillierModulus | PseudonymBundle | TrustToken | HandshakeResponse
            ),
            Role::Processor(_) => matches!(
                item,
                GroupParams | PaillierModulus | PseudonymBundle | TrustToken | TaskAnnouncement
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeliveryLog {
    entries: Vec<(Role, Item)>,
}

impl DeliveryLog {
    pub fn record(&mut self, role: Role, item: Item) {
        self.entries.push((role, item));
    }

    pub fn entries(&self) -> &[(Role, Item)] {
        &self.entries
    }

    pub fn received(&self, role: Role) -> impl Iterator<Item = Item> + '_ {
        self.entries.iter().filter(move |(r, _)| *r == role).map(|(_, i)| *i)
    }

    pub fn violations(&self) -> Vec<(Role, Item)> {
        self.entries
            .iter()
            .copied()
            .filter(|(r, i)| !r.may_receive(*i))
            .collect()
    }
}
