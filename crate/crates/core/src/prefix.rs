//! Prefix helpers on top of `ipnet`. Both families are handled as
//! left-aligned 128-bit keys so the trie code is family-agnostic.

use std::net::IpAddr;

use ipnet::{IpNet, Ipv4Net, Ipv6Net};
use serde::{Deserialize, Serialize};

use crate::error::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    V4,
    V6,
}

impl Family {
    pub fn of(net: &IpNet) -> Family {
        match net {
            IpNet::V4(_) => Family::V4,
            IpNet::V6(_) => Family::V6,
        }
    }

    pub fn max_len(self) -> u8 {
        match self {
            Family::V4 => 32,
            Family::V6 => 128,
        }
    }

    /// Length of the unit prefix used when comparing attributions
    /// (/24 for IPv4, /48 for IPv6).
    pub fn unit_len(self) -> u8 {
        match self {
            Family::V4 => 24,
            Family::V6 => 48,
        }
    }
}

/// Left-aligned key bits and prefix length.
pub fn key_of(net: &IpNet) -> (u128, u8) {
    match net {
        IpNet::V4(n) => ((u128::from(u32::from(n.network()))) << 96, n.prefix_len()),
        IpNet::V6(n) => (u128::from(n.network()), n.prefix_len()),
    }
}

pub fn net_from_key(family: Family, key: u128, len: u8) -> IpNet {
    match family {
        Family::V4 => IpNet::V4(
            Ipv4Net::new(((key >> 96) as u32).into(), len).expect("valid v4 length"),
        ),
        Family::V6 => IpNet::V6(Ipv6Net::new(key.into(), len).expect("valid v6 length")),
    }
}

/// Host route for an address (`/32` or `/128`).
pub fn host_net(addr: IpAddr) -> IpNet {
    IpNet::from(addr)
}

/// Parses a query target: a bare address or a prefix in CIDR notation.
/// Prefixes with host bits set are truncated to their network.
pub fn parse_target(s: &str) -> Result<IpNet, InputError> {
    let s = s.trim();
    if let Ok(addr) = s.parse::<IpAddr>() {
        return Ok(host_net(addr));
    }
    s.parse::<IpNet>()
        .map(|n| n.trunc())
        .map_err(|_| InputError::BadTarget(s.to_string()))
}

/// The comparison unit (/24 or /48) containing `net`'s base address.
pub fn unit_of(net: &IpNet) -> IpNet {
    let len = Family::of(net).unit_len();
    IpNet::new(net.network(), len.min(net.prefix_len()))
        .expect("unit length within family")
        .trunc()
}
