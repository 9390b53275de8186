"""Heaps for the specification "receive x, then send 2x" and helpers
shared by the heap tests and the acceptance suite."""

from ioweave.assertion import ChunkAtom, ExistsPlace, ExistsValue, Star
from ioweave.heap import Heap, Perm, Token
from ioweave.process import Typing
from ioweave.values import UNIT, Action

T, T1, T2 = "t", "t1", "t2"


def typing(recv_inputs=(12,)):
    return Typing({"recv": (UNIT,), "send": (24, 35, 38)},
                  lambda b, v: tuple(recv_inputs) if b == "recv" else (UNIT,))


def recv(w):
    return Action("recv", UNIT, w)


def send(v):
    return Action("send", v, UNIT)


def recv_perm(src, w, dst):
    return Perm("recv", src, UNIT, w, dst)


def send_perm(src, v, dst):
    return Perm("send", src, v, UNIT, dst)


H1 = Heap([Token(T), recv_perm(T, 12, T1), send_perm(T1, 24, T2)])
H2 = Heap([Token(T), recv_perm(T, 12, T), send_perm(T, 24, T)])
H3 = H1.add(send_perm(T1, 35, T2))
H1_ALT = Heap([Token(T), recv_perm(T, 19, T1), send_perm(T1, 38, T2)])


def phi(recv_inputs=(12, 19)):
    """token(t) * (exists x, t', t''. recv(t, x, t') * send(t', 2x, t''))."""
    return Star(ChunkAtom(Token(T)), ExistsValue(recv_inputs, lambda x: ExistsPlace(
        None, lambda t1: ExistsPlace(None, lambda t2: Star(
            ChunkAtom(recv_perm(T, x, t1)), ChunkAtom(send_perm(t1, 2 * x, t2)))))))


def closure(*traces):
    return {tr[:k] for tr in traces for k in range(len(tr) + 1)}
