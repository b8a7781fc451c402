//! 128-bit identifiers in registry text form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;
use uuid::Uuid;

use crate::wordmem::Word;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed GUID `{0}`")]
pub struct GuidParseError(pub String);

/// A GUID, printed `{XXXXXXXX-XXXX-XXXX-XXXX-XXXXXXXXXXXX}` in uppercase.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guid(Uuid);

impl Guid {
    pub const fn from_u128(v: u128) -> Self {
        Guid(Uuid::from_u128(v))
    }

    pub fn as_u128(self) -> u128 {
        self.0.as_u128()
    }

    /// In-memory layout: `Data1`, `Data2 | Data3 << 16`, then `Data4` as
    /// two little-endian words, matching the C struct on a 32-bit target.
    pub fn to_words(self) -> [Word; 4] {
        let (d1, d2, d3, d4) = self.0.as_fields();
        [
            d1,
            d2 as u32 | (d3 as u32) << 16,
            u32::from_le_bytes([d4[0], d4[1], d4[2], d4[3]]),
            u32::from_le_bytes([d4[4], d4[5], d4[6], d4[7]]),
        ]
    }

    pub fn from_words(w: [Word; 4]) -> Self {
        let mut d4 = [0u8; 8];
        d4[..4].copy_from_slice(&w[2].to_le_bytes());
        d4[4..].copy_from_slice(&w[3].to_le_bytes());
        Guid(Uuid::from_fields(w[0], w[1] as u16, (w[1] >> 16) as u16, &d4))
    }
}

impl fmt::Display for Guid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}}}",
            self.0.hyphenated().encode_upper(&mut Uuid::encode_buffer())
        )
    }
}

impl fmt::Debug for Guid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Guid {
    type Err = GuidParseError;

    /// Accepts only the braced, hyphenated registry form (either case).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || GuidParseError(s.to_string());
        let inner = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(err)?;
        if inner.len() != 36 {
            return Err(err());
        }
        Uuid::try_parse(inner).map(Guid).map_err(|_| err())
    }
}

pub const IID_IUNKNOWN: Guid = Guid::from_u128(0x00000000_0000_0000_C000_000000000046);
pub const IID_IDISPATCH: Guid = Guid::from_u128(0x00020400_0000_0000_C000_000000000046);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let g: Guid = "{00020400-0000-0000-c000-000000000046}".parse().unwrap();
        assert_eq!(g, IID_IDISPATCH);
        assert_eq!(g.to_string(), "{00020400-0000-0000-C000-000000000046}");
        assert_eq!(IID_IUNKNOWN.to_string().parse::<Guid>().unwrap(), IID_IUNKNOWN);
    }

    #[test]
    fn rejects_other_forms() {
        for bad in [
            "00020400-0000-0000-C000-000000000046",
            "{00020400000000000C000000000000046}",
            "{00020400-0000-0000-C000-00000000004}",
            "{urn:uuid:00020400-0000-0000-C000-000000000046}",
            "",
        ] {
            assert!(bad.parse::<Guid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn word_layout() {
        // IID_IDispatch: Data1=0x00020400, Data2=0, Data3=0, Data4=C0 00 .. 46
        assert_eq!(IID_IDISPATCH.to_words(), [0x0002_0400, 0, 0x0000_00C0, 0x4600_0000]);
        let g = Guid::from_u128(0x0123_4567_89AB_CDEF_FEDC_BA98_7654_3210);
        assert_eq!(Guid::from_words(g.to_words()), g);
    }
}
