//! CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.

use crc::{Crc, CRC_16_IBM_3740};

const CCITT_FALSE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn crc16(bytes: &[u8]) -> u16 {
    CCITT_FALSE.checksum(bytes)
}

/// True when `data` ends with the big-endian CRC of everything before it.
pub fn crc16_verify(data: &[u8]) -> bool {
    if data.len() < 2 {
        return false;
    }
    // unreflected, zero xorout: running the CRC over message ++ crc yields 0
    crc16(data) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bit-at-a-time shift register, kept independent of the table-driven crate.
    fn reference(bytes: &[u8]) -> u16 {
        let mut reg: u16 = 0xFFFF;
        for &b in bytes {
            for i in (0..8).rev() {
                let bit = (b >> i) & 1;
                let top = (reg >> 15) as u8 & 1;
                reg <<= 1;
                if top ^ bit == 1 {
                    reg ^= 0x1021;
                }
            }
        }
        reg
    }

    #[test]
    fn check_value() {
        assert_eq!(reference(b"123456789"), 0x29B1);
        assert_eq!(crc16(b"123456789"), 0x29B1);
    }

    #[test]
    fn empty_input_is_init_register() {
        assert_eq!(reference(b""), 0xFFFF);
        assert_eq!(crc16(b""), 0xFFFF);
    }

    proptest::proptest! {
        #[test]
        fn matches_reference(data in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..64)) {
            proptest::prop_assert_eq!(crc16(&data), reference(&data));
        }

        #[test]
        fn appended_crc_verifies(data in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..64)) {
            let mut framed = data.clone();
            framed.extend_from_slice(&crc16(&data).to_be_bytes());
            proptest::prop_assert!(crc16_verify(&framed));
        }
    }
}
