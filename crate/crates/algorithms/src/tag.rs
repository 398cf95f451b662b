use regmem_sim::Encode;

/// Version tag, ordered by counter then writer id. Writer ids start at 1 so
/// the initial tag is below every written one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub counter: u64,
    pub writer: u32,
}

impl Tag {
    pub fn next_for(self, writer: usize) -> Tag {
        Tag { counter: self.counter + 1, writer: writer as u32 + 1 }
    }
}

impl Encode for Tag {
    fn encode(&self, out: &mut Vec<u8>) {
        self.counter.encode(out);
        self.writer.encode(out);
    }
}
