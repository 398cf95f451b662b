use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::{Encode, Node};

pub type Value = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MsgClass {
    ValueDependent,
    ValueIndependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Write(Value),
    Read,
}

/// Completion of a client operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Done {
    Write,
    Read(Value),
}

pub type Outbox<M> = Vec<(Node, M)>;

/// A register emulation: deterministic server and client automata plus a
/// classifier for the messages they send.
///
/// Servers only react to deliveries. Clients additionally take an invoke
/// step when idle with a scheduled operation.
pub trait Protocol: Send + Sync {
    type Server: Clone + Debug + PartialEq + Encode + Send + Sync;
    type Client: Clone + Debug + PartialEq + Encode + Send + Sync;
    type Msg: Clone + Debug + PartialEq + Encode + Send + Sync;

    fn name(&self) -> String;
    fn servers(&self) -> usize;

    fn initial_value(&self) -> Value {
        0
    }

    fn init_server(&self, s: usize) -> Self::Server;
    fn init_client(&self, c: Node) -> Self::Client;

    fn server_receive(&self, s: usize, st: &mut Self::Server, from: Node, msg: &Self::Msg, out: &mut Outbox<Self::Msg>);
    fn client_invoke(&self, c: Node, st: &mut Self::Client, op: Op, out: &mut Outbox<Self::Msg>);
    fn client_receive(&self, c: Node, st: &mut Self::Client, from: Node, msg: &Self::Msg, out: &mut Outbox<Self::Msg>) -> Option<Done>;

    fn classify(&self, msg: &Self::Msg) -> MsgClass;
    fn msg_label(&self, msg: &Self::Msg) -> &'static str;
}
