use std::collections::BTreeMap;

/// Out-of-band value attached to a stream position.
#[derive(Debug, Clone, PartialEq)]
pub enum TagValue {
    Bool(bool),
    U64(u64),
    I64(i64),
    F64(f64),
    Str(String),
    Dict(BTreeMap<String, TagValue>),
}

impl TagValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            TagValue::F64(v) => Some(*v),
            TagValue::U64(v) => Some(*v as f64),
            TagValue::I64(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            TagValue::U64(v) => Some(*v),
            TagValue::I64(v) if *v >= 0 => Some(*v as u64),
            _ => None,
        }
    }

    pub fn as_dict(&self) -> Option<&BTreeMap<String, TagValue>> {
        match self {
            TagValue::Dict(d) => Some(d),
            _ => None,
        }
    }

    /// Looks up `key` when this value is a dictionary.
    pub fn get(&self, key: &str) -> Option<&TagValue> {
        self.as_dict().and_then(|d| d.get(key))
    }
}

/// A tag at an absolute item offset of one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Tag {
    pub offset: u64,
    pub key: String,
    pub value: TagValue,
}

impl Tag {
    pub fn new(offset: u64, key: impl Into<String>, value: TagValue) -> Self {
        Self {
            offset,
            key: key.into(),
            value,
        }
    }
}
