use super::reader::Reader;
use super::ClassFileError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Constant {
    /// Slot 0 and the slot following a long or double.
    Unusable,
    Utf8(String),
    Integer,
    Float,
    Long,
    Double,
    Class { name: u16 },
    String { value: u16 },
    Fieldref { class: u16, name_and_type: u16 },
    Methodref { class: u16, name_and_type: u16 },
    InterfaceMethodref { class: u16, name_and_type: u16 },
    NameAndType { name: u16, descriptor: u16 },
    MethodHandle { kind: u8, reference: u16 },
    MethodType { descriptor: u16 },
    Dynamic { name_and_type: u16 },
    InvokeDynamic { name_and_type: u16 },
    Module { name: u16 },
    Package { name: u16 },
}

impl Constant {
    fn kind_name(&self) -> &'static str {
        match self {
            Constant::Unusable => "unusable",
            Constant::Utf8(_) => "Utf8",
            Constant::Integer => "Integer",
            Constant::Float => "Float",
            Constant::Long => "Long",
            Constant::Double => "Double",
            Constant::Class { .. } => "Class",
            Constant::String { .. } => "String",
            Constant::Fieldref { .. } => "Fieldref",
            Constant::Methodref { .. } => "Methodref",
            Constant::InterfaceMethodref { .. } => "InterfaceMethodref",
            Constant::NameAndType { .. } => "NameAndType",
            Constant::MethodHandle { .. } => "MethodHandle",
            Constant::MethodType { .. } => "MethodType",
            Constant::Dynamic { .. } => "Dynamic",
            Constant::InvokeDynamic { .. } => "InvokeDynamic",
            Constant::Module { .. } => "Module",
            Constant::Package { .. } => "Package",
        }
    }
}

#[derive(Debug)]
pub(crate) struct ConstantPool {
    entries: Vec<Constant>,
}

fn malformed(msg: impl Into<String>) -> ClassFileError {
    ClassFileError::MalformedConstantPool(msg.into())
}

/// Decodes the JVM's modified UTF-8. Unpaired surrogates become U+FFFD.
pub(crate) fn decode_modified_utf8(bytes: &[u8]) -> Option<String> {
    let mut units: Vec<u16> = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            0x01..=0x7f => {
                units.push(u16::from(b));
                i += 1;
            }
            0xc0..=0xdf => {
                let b2 = *bytes.get(i + 1)?;
                if b2 & 0xc0 != 0x80 {
                    return None;
                }
                units.push((u16::from(b & 0x1f) << 6) | u16::from(b2 & 0x3f));
                i += 2;
            }
            0xe0..=0xef => {
                let b2 = *bytes.get(i + 1)?;
                let b3 = *bytes.get(i + 2)?;
                if b2 & 0xc0 != 0x80 || b3 & 0xc0 != 0x80 {
                    return None;
                }
                units.push(
                    (u16::from(b & 0x0f) << 12)
                        | (u16::from(b2 & 0x3f) << 6)
                        | u16::from(b3 & 0x3f),
                );
                i += 3;
            }
            _ => return None,
        }
    }
    Some(
        char::decode_utf16(units)
            .map(|r| r.unwrap_or(char::REPLACEMENT_CHARACTER))
            .collect(),
    )
}

impl ConstantPool {
    pub(crate) fn parse(r: &mut Reader<'_>) -> Result<Self, ClassFileError> {
        let count = r.u2()? as usize;
        if count == 0 {
            return Err(malformed("constant_pool_count is 0"));
        }
        let mut entries = Vec::with_capacity(count);
        entries.push(Constant::Unusable);
        while entries.len() < count {
            let index = entries.len();
            let tag = r.u1()?;
            let entry = match tag {
                1 => {
                    let len = r.u2()? as usize;
                    let raw = r.bytes(len)?;
                    let s = decode_modified_utf8(raw)
                        .ok_or_else(|| malformed(format!("invalid modified UTF-8 at #{index}")))?;
                    Constant::Utf8(s)
                }
                3 => {
                    r.skip(4)?;
                    Constant::Integer
                }
                4 => {
                    r.skip(4)?;
                    Constant::Float
                }
                5 | 6 => {
                    r.skip(8)?;
                    if index + 1 >= count {
                        return Err(malformed(format!(
                            "8-byte constant at #{index} has no second slot"
                        )));
                    }
                    entries.push(if tag == 5 { Constant::Long } else { Constant::Double });
                    entries.push(Constant::Unusable);
                    continue;
                }
                7 => Constant::Class { name: r.u2()? },
                8 => Constant::String { value: r.u2()? },
                9 => Constant::Fieldref { class: r.u2()?, name_and_type: r.u2()? },
                10 => Constant::Methodref { class: r.u2()?, name_and_type: r.u2()? },
                11 => Constant::InterfaceMethodref { class: r.u2()?, name_and_type: r.u2()? },
                12 => Constant::NameAndType { name: r.u2()?, descriptor: r.u2()? },
                15 => Constant::MethodHandle { kind: r.u1()?, reference: r.u2()? },
                16 => Constant::MethodType { descriptor: r.u2()? },
                17 => {
                    r.skip(2)?;
                    Constant::Dynamic { name_and_type: r.u2()? }
                }
                18 => {
                    r.skip(2)?;
                    Constant::InvokeDynamic { name_and_type: r.u2()? }
                }
                19 => Constant::Module { name: r.u2()? },
                20 => Constant::Package { name: r.u2()? },
                other => return Err(malformed(format!("unknown tag {other} at #{index}"))),
            };
            entries.push(entry);
        }
        let pool = ConstantPool { entries };
        pool.validate()?;
        Ok(pool)
    }

    pub(crate) fn get(&self, index: u16) -> Result<&Constant, ClassFileError> {
        match self.entries.get(index as usize) {
            None | Some(Constant::Unusable) => {
                Err(malformed(format!("index #{index} out of range or unusable")))
            }
            Some(c) => Ok(c),
        }
    }

    fn expect(&self, from: usize, index: u16, want: &[&str]) -> Result<(), ClassFileError> {
        let entry = self.get(index).map_err(|_| {
            malformed(format!("#{from} references invalid index #{index}"))
        })?;
        if want.contains(&entry.kind_name()) {
            Ok(())
        } else {
            Err(malformed(format!(
                "#{from} references #{index} of kind {}, expected {}",
                entry.kind_name(),
                want.join(" or ")
            )))
        }
    }

    /// Checks every cross-reference points at an entry of the right kind.
    fn validate(&self) -> Result<(), ClassFileError> {
        for (i, entry) in self.entries.iter().enumerate() {
            match *entry {
                Constant::Class { name }
                | Constant::Module { name }
                | Constant::Package { name } => self.expect(i, name, &["Utf8"])?,
                Constant::String { value } => self.expect(i, value, &["Utf8"])?,
                Constant::MethodType { descriptor } => self.expect(i, descriptor, &["Utf8"])?,
                Constant::Fieldref { class, name_and_type }
                | Constant::Methodref { class, name_and_type }
                | Constant::InterfaceMethodref { class, name_and_type } => {
                    self.expect(i, class, &["Class"])?;
                    self.expect(i, name_and_type, &["NameAndType"])?;
                }
                Constant::NameAndType { name, descriptor } => {
                    self.expect(i, name, &["Utf8"])?;
                    self.expect(i, descriptor, &["Utf8"])?;
                }
                Constant::Dynamic { name_and_type } | Constant::InvokeDynamic { name_and_type } => {
                    self.expect(i, name_and_type, &["NameAndType"])?
                }
                Constant::MethodHandle { kind, reference } => {
                    let want: &[&str] = match kind {
                        1..=4 => &["Fieldref"],
                        5 | 8 => &["Methodref"],
                        6 | 7 => &["Methodref", "InterfaceMethodref"],
                        9 => &["InterfaceMethodref"],
                        _ => {
                            return Err(malformed(format!(
                                "#{i} has invalid reference kind {kind}"
                            )))
                        }
                    };
                    self.expect(i, reference, want)?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub(crate) fn utf8(&self, index: u16) -> Result<&str, ClassFileError> {
        match self.get(index)? {
            Constant::Utf8(s) => Ok(s),
            other => Err(malformed(format!(
                "#{index} is {}, expected Utf8",
                other.kind_name()
            ))),
        }
    }

    pub(crate) fn class_name(&self, index: u16) -> Result<&str, ClassFileError> {
        match self.get(index)? {
            Constant::Class { name } => self.utf8(*name),
            other => Err(malformed(format!(
                "#{index} is {}, expected Class",
                other.kind_name()
            ))),
        }
    }

    /// Resolves a Methodref/InterfaceMethodref to (owner, name, descriptor),
    /// rejecting any kind not listed in `allowed`.
    pub(crate) fn method_ref(
        &self,
        index: u16,
        allowed: &[&str],
    ) -> Result<(&str, &str, &str), ClassFileError> {
        let entry = self.get(index)?;
        let (class, nat) = match *entry {
            Constant::Methodref { class, name_and_type }
            | Constant::InterfaceMethodref { class, name_and_type }
                if allowed.contains(&entry.kind_name()) =>
            {
                (class, name_and_type)
            }
            _ => {
                return Err(malformed(format!(
                    "#{index} is {}, expected {}",
                    entry.kind_name(),
                    allowed.join(" or ")
                )))
            }
        };
        let owner = self.class_name(class)?;
        match *self.get(nat)? {
            Constant::NameAndType { name, descriptor } => {
                Ok((owner, self.utf8(name)?, self.utf8(descriptor)?))
            }
            _ => Err(malformed(format!("#{nat} is not a NameAndType"))),
        }
    }

    pub(crate) fn expect_invoke_dynamic(&self, index: u16) -> Result<(), ClassFileError> {
        match self.get(index)? {
            Constant::InvokeDynamic { .. } => Ok(()),
            other => Err(malformed(format!(
                "#{index} is {}, expected InvokeDynamic",
                other.kind_name()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modified_utf8_null_and_supplementary() {
        assert_eq!(decode_modified_utf8(&[0xc0, 0x80]).as_deref(), Some("\0"));
        // U+1F600 as a surrogate pair, each encoded in three bytes
        let bytes = [0xed, 0xa0, 0xbd, 0xed, 0xb8, 0x80];
        assert_eq!(decode_modified_utf8(&bytes).as_deref(), Some("\u{1F600}"));
        assert_eq!(decode_modified_utf8(b"java/lang/Object").as_deref(), Some("java/lang/Object"));
        assert_eq!(decode_modified_utf8(&[0x00]), None);
        assert_eq!(decode_modified_utf8(&[0xf0, 0x9f, 0x98, 0x80]), None);
        assert_eq!(decode_modified_utf8(&[0xc3]), None);
    }

    fn pool(bytes: &[u8]) -> Result<ConstantPool, ClassFileError> {
        ConstantPool::parse(&mut Reader::new(bytes))
    }

    #[test]
    fn long_takes_two_slots() {
        // count 4: #1 Long, #2 unusable, #3 Utf8 "x"
        let mut b = vec![0, 4, 5, 0, 0, 0, 0, 0, 0, 0, 1];
        b.extend_from_slice(&[1, 0, 1, b'x']);
        let p = pool(&b).unwrap();
        assert_eq!(p.utf8(3).unwrap(), "x");
        assert!(p.get(2).is_err());
    }

    #[test]
    fn long_in_last_slot_is_rejected() {
        let b = vec![0, 2, 5, 0, 0, 0, 0, 0, 0, 0, 1];
        assert!(matches!(pool(&b), Err(ClassFileError::MalformedConstantPool(_))));
    }

    #[test]
    fn wrong_kind_reference_is_rejected() {
        // #1 Class -> #2, but #2 is an Integer
        let b = vec![0, 3, 7, 0, 2, 3, 0, 0, 0, 0];
        assert!(matches!(pool(&b), Err(ClassFileError::MalformedConstantPool(_))));
    }

    #[test]
    fn unknown_tag_is_rejected() {
        assert!(matches!(pool(&[0, 2, 2, 0]), Err(ClassFileError::MalformedConstantPool(_))));
    }

    #[test]
    fn out_of_range_reference_is_rejected() {
        assert!(matches!(pool(&[0, 2, 7, 0, 9]), Err(ClassFileError::MalformedConstantPool(_))));
    }
}
