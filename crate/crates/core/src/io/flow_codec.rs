//! Bit-level flow serialization.
//!
//! Records pack into a fixed 104-bit layout, most significant bit first
//! within each field, in canonical field order:
//!
//! ```text
//! protocol(8) | src_ip(32) | src_port(16) | dst_ip(32) | dst_port(16)
//! ```
//!
//! A wildcard field serializes as zero bits under a zeroed mask span, so a
//! masked encoding round-trips exactly; detector workloads that need plain
//! bit strings take the concrete bits (or a single projected field) and
//! reject wildcards in the spans they use.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::ops::Range;

use crate::encoding::{BitString, FieldValue, FlowRecord};

use super::IoError;

pub const PROTOCOL_SPAN: Range<usize> = 0..8;
pub const SRC_IP_SPAN: Range<usize> = 8..40;
pub const SRC_PORT_SPAN: Range<usize> = 40..56;
pub const DST_IP_SPAN: Range<usize> = 56..88;
pub const DST_PORT_SPAN: Range<usize> = 88..104;

/// Total serialized width in bits.
pub const FLOW_BITS: usize = 104;

/// Maps protocol tokens to their 8-bit codes. The defaults carry the
/// assigned internet protocol numbers for tcp, udp, and icmp.
#[derive(Debug, Clone)]
pub struct ProtocolRegistry {
    token_to_code: BTreeMap<String, u8>,
    code_to_token: BTreeMap<u8, String>,
}

impl Default for ProtocolRegistry {
    fn default() -> Self {
        let mut registry = Self {
            token_to_code: BTreeMap::new(),
            code_to_token: BTreeMap::new(),
        };
        for (token, code) in [("icmp", 1u8), ("tcp", 6), ("udp", 17)] {
            registry
                .register(token, code)
                .expect("default registry is collision-free");
        }
        registry
    }
}

impl ProtocolRegistry {
    pub fn register(&mut self, token: &str, code: u8) -> Result<(), IoError> {
        let token = token.to_ascii_lowercase();
        if self.token_to_code.contains_key(&token) || self.code_to_token.contains_key(&code) {
            return Err(IoError::ContradictorySpec {
                reason: format!("protocol {token:?}/{code} collides with an existing entry"),
            });
        }
        self.token_to_code.insert(token.clone(), code);
        self.code_to_token.insert(code, token);
        Ok(())
    }

    pub fn code(&self, token: &str) -> Option<u8> {
        self.token_to_code.get(token).copied()
    }

    pub fn token(&self, code: u8) -> Option<&str> {
        self.code_to_token.get(&code).map(String::as_str)
    }

    /// Packs a record into bits plus a significance mask (a set mask bit
    /// means the data bit is meaningful; wildcard spans are zeroed).
    pub fn serialize_flow(&self, record: &FlowRecord) -> Result<EncodedFlow, IoError> {
        let mut bits = vec![false; FLOW_BITS];
        let mut mask = vec![false; FLOW_BITS];

        let protocol = match &record.protocol {
            FieldValue::Value(token) => Some(
                self.code(token)
                    .ok_or_else(|| IoError::UnknownProtocol {
                        token: token.clone(),
                    })? as u64,
            ),
            FieldValue::Any => None,
        };
        pack(&mut bits, &mut mask, PROTOCOL_SPAN, protocol);
        pack(
            &mut bits,
            &mut mask,
            SRC_IP_SPAN,
            record.src_ip.value().map(|ip| u32::from(*ip) as u64),
        );
        pack(
            &mut bits,
            &mut mask,
            SRC_PORT_SPAN,
            record.src_port.value().map(|&p| p as u64),
        );
        pack(
            &mut bits,
            &mut mask,
            DST_IP_SPAN,
            record.dst_ip.value().map(|ip| u32::from(*ip) as u64),
        );
        pack(
            &mut bits,
            &mut mask,
            DST_PORT_SPAN,
            record.dst_port.value().map(|&p| p as u64),
        );

        Ok(EncodedFlow {
            bits: BitString::new(bits).expect("fixed non-zero width"),
            mask: BitString::new(mask).expect("fixed non-zero width"),
        })
    }

    /// Field-wise inverse of [`Self::serialize_flow`]; rejects encodings
    /// whose mask splits a field or whose wildcard spans carry set bits.
    pub fn deserialize_flow(&self, encoded: &EncodedFlow) -> Result<FlowRecord, IoError> {
        if encoded.bits.len() != FLOW_BITS || encoded.mask.len() != FLOW_BITS {
            return Err(IoError::NonCanonicalBits {
                reason: format!(
                    "expected {FLOW_BITS} bits, found {} data / {} mask",
                    encoded.bits.len(),
                    encoded.mask.len()
                ),
            });
        }
        let protocol = match unpack(encoded, PROTOCOL_SPAN, "protocol")? {
            Some(code) => {
                let code = code as u8;
                FieldValue::Value(
                    self.token(code)
                        .ok_or(IoError::UnknownProtocolCode { code })?
                        .to_string(),
                )
            }
            None => FieldValue::Any,
        };
        let src_ip = unpack(encoded, SRC_IP_SPAN, "src_ip")?
            .map(|v| FieldValue::Value(Ipv4Addr::from(v as u32)))
            .unwrap_or(FieldValue::Any);
        let src_port = unpack(encoded, SRC_PORT_SPAN, "src_port")?
            .map(|v| FieldValue::Value(v as u16))
            .unwrap_or(FieldValue::Any);
        let dst_ip = unpack(encoded, DST_IP_SPAN, "dst_ip")?
            .map(|v| FieldValue::Value(Ipv4Addr::from(v as u32)))
            .unwrap_or(FieldValue::Any);
        let dst_port = unpack(encoded, DST_PORT_SPAN, "dst_port")?
            .map(|v| FieldValue::Value(v as u16))
            .unwrap_or(FieldValue::Any);
        Ok(FlowRecord {
            protocol,
            src_ip,
            src_port,
            dst_ip,
            dst_port,
        })
    }
}

fn pack(bits: &mut [bool], mask: &mut [bool], span: Range<usize>, value: Option<u64>) {
    let Some(value) = value else {
        return; // wildcard: zero bits under a zero mask
    };
    let width = span.len();
    for (offset, index) in span.enumerate() {
        bits[index] = (value >> (width - 1 - offset)) & 1 == 1;
        mask[index] = true;
    }
}

fn unpack(encoded: &EncodedFlow, span: Range<usize>, field: &str) -> Result<Option<u64>, IoError> {
    let mask_bits = &encoded.mask.bits()[span.clone()];
    let data_bits = &encoded.bits.bits()[span];
    if mask_bits.iter().all(|&m| m) {
        let mut value = 0u64;
        for &bit in data_bits {
            value = (value << 1) | bit as u64;
        }
        Ok(Some(value))
    } else if mask_bits.iter().all(|&m| !m) {
        if data_bits.iter().any(|&b| b) {
            return Err(IoError::NonCanonicalBits {
                reason: format!("wildcard span {field} carries set bits"),
            });
        }
        Ok(None)
    } else {
        Err(IoError::NonCanonicalBits {
            reason: format!("mask splits field {field}"),
        })
    }
}

/// A serialized flow: data bits plus the significance mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedFlow {
    pub bits: BitString,
    pub mask: BitString,
}

impl EncodedFlow {
    /// True when every bit is significant (no wildcard anywhere).
    pub fn is_fully_masked(&self) -> bool {
        self.mask.bits().iter().all(|&m| m)
    }
}

/// Selects which serialized span feeds the detector workloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowField {
    #[default]
    Full,
    Protocol,
    SrcIp,
    SrcPort,
    DstIp,
    DstPort,
}

impl FlowField {
    pub fn span(&self) -> Range<usize> {
        match self {
            FlowField::Full => 0..FLOW_BITS,
            FlowField::Protocol => PROTOCOL_SPAN,
            FlowField::SrcIp => SRC_IP_SPAN,
            FlowField::SrcPort => SRC_PORT_SPAN,
            FlowField::DstIp => DST_IP_SPAN,
            FlowField::DstPort => DST_PORT_SPAN,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FlowField::Full => "full",
            FlowField::Protocol => "protocol",
            FlowField::SrcIp => "src-ip",
            FlowField::SrcPort => "src-port",
            FlowField::DstIp => "dst-ip",
            FlowField::DstPort => "dst-port",
        }
    }
}

impl std::fmt::Display for FlowField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FlowField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(FlowField::Full),
            "protocol" => Ok(FlowField::Protocol),
            "src-ip" => Ok(FlowField::SrcIp),
            "src-port" => Ok(FlowField::SrcPort),
            "dst-ip" => Ok(FlowField::DstIp),
            "dst-port" => Ok(FlowField::DstPort),
            other => Err(format!("unknown flow field {other:?}")),
        }
    }
}

/// Extracts the chosen span as a plain bit string; every bit in the span
/// must be significant (no wildcard inside the projected field).
pub fn project_field(encoded: &EncodedFlow, field: FlowField) -> Result<BitString, IoError> {
    let span = field.span();
    if !encoded.mask.bits()[span.clone()].iter().all(|&m| m) {
        return Err(IoError::WildcardField {
            field: field.as_str(),
        });
    }
    Ok(BitString::new(encoded.bits.bits()[span].to_vec()).expect("spans are non-empty"))
}
