//! Instruction-length table for walking a `Code` attribute's bytecode.
//!
//! Only invocation instructions are decoded by the parser; everything else is
//! stepped over using these lengths.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BytecodeError {
    #[error("unknown opcode 0x{opcode:02x} at pc {pc}")]
    UnknownOpcode { opcode: u8, pc: usize },
    #[error("instruction at pc {pc} runs past the end of the code array")]
    Overrun { pc: usize },
    #[error("invalid wide-prefixed opcode 0x{opcode:02x} at pc {pc}")]
    InvalidWide { opcode: u8, pc: usize },
    #[error("tableswitch at pc {pc} has low {low} > high {high}")]
    InvalidTableSwitch { pc: usize, low: i32, high: i32 },
    #[error("lookupswitch at pc {pc} has negative pair count {npairs}")]
    InvalidLookupSwitch { pc: usize, npairs: i32 },
}

enum Shape {
    Fixed(usize),
    TableSwitch,
    LookupSwitch,
    Wide,
    Invalid,
}

fn shape(opcode: u8) -> Shape {
    use Shape::*;
    match opcode {
        0x00..=0x0f => Fixed(1),
        0x10 => Fixed(2),             // bipush
        0x11 => Fixed(3),             // sipush
        0x12 => Fixed(2),             // ldc
        0x13 | 0x14 => Fixed(3),      // ldc_w, ldc2_w
        0x15..=0x19 => Fixed(2),      // xload
        0x1a..=0x35 => Fixed(1),      // xload_n, xaload
        0x36..=0x3a => Fixed(2),      // xstore
        0x3b..=0x83 => Fixed(1),      // xstore_n .. lxor
        0x84 => Fixed(3),             // iinc
        0x85..=0x98 => Fixed(1),      // conversions, comparisons
        0x99..=0xa8 => Fixed(3),      // if*, goto, jsr
        0xa9 => Fixed(2),             // ret
        0xaa => TableSwitch,
        0xab => LookupSwitch,
        0xac..=0xb1 => Fixed(1),      // returns
        0xb2..=0xb8 => Fixed(3),      // field access, invokevirtual/special/static
        0xb9 | 0xba => Fixed(5),      // invokeinterface, invokedynamic
        0xbb => Fixed(3),             // new
        0xbc => Fixed(2),             // newarray
        0xbd => Fixed(3),             // anewarray
        0xbe | 0xbf => Fixed(1),      // arraylength, athrow
        0xc0 | 0xc1 => Fixed(3),      // checkcast, instanceof
        0xc2 | 0xc3 => Fixed(1),      // monitorenter/exit
        0xc4 => Wide,
        0xc5 => Fixed(4),             // multianewarray
        0xc6 | 0xc7 => Fixed(3),      // ifnull, ifnonnull
        0xc8 | 0xc9 => Fixed(5),      // goto_w, jsr_w
        _ => Invalid,
    }
}

fn read_i32(code: &[u8], at: usize, pc: usize) -> Result<i32, BytecodeError> {
    code.get(at..at + 4)
        .map(|b| i32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(BytecodeError::Overrun { pc })
}

/// Length in bytes of the instruction starting at `pc`.
pub fn instruction_length(code: &[u8], pc: usize) -> Result<usize, BytecodeError> {
    let opcode = *code.get(pc).ok_or(BytecodeError::Overrun { pc })?;
    let len = match shape(opcode) {
        Shape::Fixed(n) => n,
        Shape::Invalid => return Err(BytecodeError::UnknownOpcode { opcode, pc }),
        Shape::TableSwitch => {
            // operands start at the next multiple of four from the start of the code
            let base = (pc + 4) & !3;
            let low = read_i32(code, base + 4, pc)?;
            let high = read_i32(code, base + 8, pc)?;
            if low > high {
                return Err(BytecodeError::InvalidTableSwitch { pc, low, high });
            }
            let entries = (i64::from(high) - i64::from(low) + 1) as usize;
            base - pc + 12 + 4 * entries
        }
        Shape::LookupSwitch => {
            let base = (pc + 4) & !3;
            let npairs = read_i32(code, base + 4, pc)?;
            if npairs < 0 {
                return Err(BytecodeError::InvalidLookupSwitch { pc, npairs });
            }
            base - pc + 8 + 8 * npairs as usize
        }
        Shape::Wide => {
            let inner = *code.get(pc + 1).ok_or(BytecodeError::Overrun { pc })?;
            match inner {
                0x84 => 6,
                0x15..=0x19 | 0x36..=0x3a | 0xa9 => 4,
                _ => return Err(BytecodeError::InvalidWide { opcode: inner, pc }),
            }
        }
    };
    if pc + len > code.len() {
        return Err(BytecodeError::Overrun { pc });
    }
    Ok(len)
}

/// Iterates `(pc, opcode)` over every instruction start.
pub fn instructions(code: &[u8]) -> Instructions<'_> {
    Instructions { code, pc: 0 }
}

pub struct Instructions<'a> {
    code: &'a [u8],
    pc: usize,
}

impl Iterator for Instructions<'_> {
    type Item = Result<(usize, u8), BytecodeError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pc >= self.code.len() {
            return None;
        }
        let pc = self.pc;
        match instruction_length(self.code, pc) {
            Ok(len) => {
                self.pc += len;
                Some(Ok((pc, self.code[pc])))
            }
            Err(e) => {
                self.pc = self.code.len();
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_lengths() {
        assert_eq!(instruction_length(&[0x00], 0), Ok(1));
        assert_eq!(instruction_length(&[0x11, 0, 0], 0), Ok(3));
        assert_eq!(instruction_length(&[0xb9, 0, 1, 1, 0], 0), Ok(5));
        assert_eq!(instruction_length(&[0xc5, 0, 1, 2], 0), Ok(4));
        assert_eq!(
            instruction_length(&[0xb6, 0], 0),
            Err(BytecodeError::Overrun { pc: 0 })
        );
        assert_eq!(
            instruction_length(&[0xcb], 0),
            Err(BytecodeError::UnknownOpcode { opcode: 0xcb, pc: 0 })
        );
    }

    #[test]
    fn tableswitch_padding_depends_on_pc() {
        // tableswitch at pc 1: two padding bytes, then default/low/high and 1 entry
        let mut code = vec![0x1a, 0xaa, 0, 0];
        code.extend_from_slice(&8i32.to_be_bytes());
        code.extend_from_slice(&0i32.to_be_bytes());
        code.extend_from_slice(&0i32.to_be_bytes());
        code.extend_from_slice(&8i32.to_be_bytes());
        code.push(0xb1);
        assert_eq!(instruction_length(&code, 1), Ok(3 + 12 + 4));
        let starts: Vec<usize> = instructions(&code).map(|r| r.unwrap().0).collect();
        assert_eq!(starts, vec![0, 1, 20]);
    }

    #[test]
    fn lookupswitch_at_aligned_pc_has_three_pad_bytes() {
        let mut code = vec![0, 0, 0, 0, 0xab, 0, 0, 0];
        code.extend_from_slice(&0i32.to_be_bytes());
        code.extend_from_slice(&1i32.to_be_bytes());
        code.extend_from_slice(&[0; 8]);
        assert_eq!(instruction_length(&code, 4), Ok(4 + 8 + 8));
    }

    #[test]
    fn wide_forms() {
        assert_eq!(instruction_length(&[0xc4, 0x15, 1, 0], 0), Ok(4));
        assert_eq!(instruction_length(&[0xc4, 0x84, 1, 0, 0, 5], 0), Ok(6));
        assert_eq!(
            instruction_length(&[0xc4, 0x60, 0, 0], 0),
            Err(BytecodeError::InvalidWide { opcode: 0x60, pc: 0 })
        );
    }

    #[test]
    fn malformed_switches() {
        let mut code = vec![0xaa, 0, 0, 0];
        code.extend_from_slice(&0i32.to_be_bytes());
        code.extend_from_slice(&5i32.to_be_bytes());
        code.extend_from_slice(&1i32.to_be_bytes());
        assert!(matches!(
            instruction_length(&code, 0),
            Err(BytecodeError::InvalidTableSwitch { .. })
        ));
        let mut code = vec![0xab, 0, 0, 0];
        code.extend_from_slice(&0i32.to_be_bytes());
        code.extend_from_slice(&(-1i32).to_be_bytes());
        assert!(matches!(
            instruction_length(&code, 0),
            Err(BytecodeError::InvalidLookupSwitch { .. })
        ));
    }
}
