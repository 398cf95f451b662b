use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Encode;

/// A process. Servers are numbered from 1, clients from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Server(usize),
    Writer(usize),
    Reader(usize),
}

impl Node {
    pub fn is_server(&self) -> bool {
        matches!(self, Node::Server(_))
    }

    pub fn is_client(&self) -> bool {
        !self.is_server()
    }

    pub fn server_index(&self) -> Option<usize> {
        match self {
            Node::Server(s) => Some(*s),
            _ => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Server(i) => write!(f, "s{i}"),
            Node::Writer(i) => write!(f, "w{i}"),
            Node::Reader(i) => write!(f, "r{i}"),
        }
    }
}

impl Encode for Node {
    fn encode(&self, out: &mut Vec<u8>) {
        let (k, i) = match self {
            Node::Server(i) => (0u8, i),
            Node::Writer(i) => (1, i),
            Node::Reader(i) => (2, i),
        };
        out.push(k);
        i.encode(out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId {
    pub src: Node,
    pub dst: Node,
}

impl ChannelId {
    pub fn new(src: Node, dst: Node) -> Self {
        assert_ne!(src, dst, "channel endpoints must differ");
        ChannelId { src, dst }
    }

    pub fn is_server_to_server(&self) -> bool {
        self.src.is_server() && self.dst.is_server()
    }

    pub fn touches(&self, n: Node) -> bool {
        self.src == n || self.dst == n
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActorId {
    Node(Node),
    Channel(ChannelId),
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActorId::Node(n) => write!(f, "{n}"),
            ActorId::Channel(c) => write!(f, "ch({c})"),
        }
    }
}

impl From<Node> for ActorId {
    fn from(n: Node) -> Self {
        ActorId::Node(n)
    }
}

impl From<ChannelId> for ActorId {
    fn from(c: ChannelId) -> Self {
        ActorId::Channel(c)
    }
}
