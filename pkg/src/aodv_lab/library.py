"""Built-in scenarios: the worked examples and counterexamples, with their expected outcomes.

Each scenario carries assertions for the default reading and guarded
assertions for the readings or improvements that change the outcome, so a run
under any configuration is self-checking.
"""

from __future__ import annotations

from .config import InterpretationConfig, parse_config
from .scenario import Report, Scenario, parse_scenario, run_scenario

BUILTINS: dict = {}


def _builtin(name: str, summary: str, configs: tuple = ()):
    def register(text: str):
        BUILTINS[name] = (summary, text, configs)
        return text
    return register


_builtin("fig1", "route discovery over two hops; s learns d via a", ("",))("""\
nodes s a b d
connect s a
connect s b
connect a d
connect b d
inject s d "hello"
drain
assert route s d valid hops=2 nhop=a
assert route d s valid hops=2 nhop=a
assert delivered d "hello"
assert loop-free
expect route-discovery satisfied s d
expect pd1 satisfied s d "hello"
""")

_builtin("fig2", "a reply from the destination travels back along the reverse route", ("",))("""\
nodes a b c d
connect a b
connect a d
connect b c
inject a c "p"
drain
assert route a c valid sqn=1 hops=2 nhop=b
assert route c a valid sqn=2 hops=2 nhop=b
assert route b a valid hops=1 nhop=a
assert delivered c "p"
assert loop-free
""")

_builtin("fig3", "the destination answers a request over a link that appeared meanwhile", ("",))("""\
nodes s a b d
connect s a
connect a b
connect b d
inject s d "p1"
fire s recv
fire s rreq d          # RREQ1 reaches a
fire a recv            # a forwards RREQ1 to s and b
connect s d            # s moves into range of d
fire s recv            # s drops its own request
inject s b "p2"
fire s recv
fire s rreq b          # RREQ2 reaches a and d
fire d recv            # d learns s directly and forwards RREQ2
fire b recv            # b forwards RREQ1 towards d
fire b recv            # RREQ2 via d refreshes b's route to s; b answers it
assert route b s valid sqn=3 hops=2 nhop=d
fire d recv            # d handles RREQ1 and replies straight to s
drain
assert route s d valid sqn=1 hops=1 nhop=d
assert route d s valid sqn=3 hops=1 nhop=s
assert delivered d "p1"
assert loop-free
""")

_builtin("fig4", "decreasing a sequence number creates a loop", ("", "amb2=2b"))("""\
nodes a b d s x
connect b d
connect d a
connect a s
inject d s "p1"
drain
assert route a d valid sqn=2 hops=1 nhop=d
inject b x "q"
drain
assert route a d valid sqn=2 hops=1 nhop=d unless amb2=2b
assert route a d valid sqn=0 hops=1 nhop=d unk if amb2=2b
disconnect a s
disconnect a d
inject a d "p2"
fire a recv
fire a send d          # the link to d is gone: a invalidates and reports
finish a
connect a s
fire a rreq d
drain
assert loop-free unless amb2=2b
assert loop d a s if amb2=2b
""")

_builtin("fig5", "incrementing unknown sequence numbers creates a loop", ("", "amb7=7b"))("""\
nodes s a b d
connect s a
connect a d
connect d b
inject s d "p1"
drain
assert route s d valid sqn=1 hops=2 nhop=a
inject b a "p2"
drain
assert route a d valid sqn=1 hops=1 nhop=d unk
disconnect a s
disconnect a d
inject a d "p3"
fire a recv
fire a send d
finish a
connect a s
connect s d
fire a rreq d
drain
assert loop-free unless amb7=7b
assert loop d a s if amb7=7b
assert route a d valid hops=2 nhop=s unless amb7=7b
assert delivered d "p3" unless amb7=7b
""")

_builtin("fig8", "self-entries and blind invalidation by a route error create a loop",
         ("", "amb5=5a,amb8=8a", "amb5=5a,amb8=8b", "amb5=5a,amb8=8c"))("""\
nodes a c d s x
connect s c
connect c a
connect a d
inject s d "p1"
fire s recv
fire s rreq d          # RREQ1 reaches c only
connect s d
inject s x "p2"
fire s recv
fire s rreq x          # RREQ2 reaches c and d; x is out of range
fire d recv            # d learns s and forwards RREQ2 to a and s
fire s recv            # s learns d and drops its own request
disconnect s d
inject d a "pa"
fire d recv
fire d rreq a          # RREQ3 reaches a
fire a recv            # a learns s via d and forwards RREQ2
fire a recv            # a answers RREQ3
fire c recv            # c forwards the delayed RREQ1 to s and a
fire c recv
fire a recv            # a answers RREQ1 on behalf of d, but towards d
connect s d
drain                  # d forwards the reply about itself to s
assert route d d valid sqn=2 hops=2 nhop=a
assert route s d valid sqn=2 hops=3 nhop=d
connect s x
inject d x "px"
drain
assert route s d valid sqn=3 hops=1 nhop=d
assert route x d valid sqn=3 hops=2 nhop=s
disconnect a d
inject d a "pa2"
fire d recv
fire d send a          # the link to a is gone
finish d               # a route error reaches s
disconnect s d
disconnect s c
fire s recv            # s handles the route error
inject s d "p3"
drain
assert loop-free unless amb5=5a,amb8=8a|8b|8c
assert loop d s x if amb5=5a,amb8=8a|8b|8c
""")

_builtin("fig10", "the reply to a request is dropped at an intermediate node",
         ("", "improve=fwd-rrep"))("""\
nodes s a d
connect s a
connect a d
inject a d "pa"
fire a recv
fire a rreq d          # a's request for d
fire s recv            # s learns a and relays the request
inject s d "ps"
fire s recv
fire s rreq d          # s's request for d
fire a recv            # a drops its own request relayed by s
fire a recv            # a forwards s's request
fire d recv            # d answers a's request
fire d recv            # d answers s's request, again via a
drain
expect reply-issued satisfied s d
expect route-discovery violated s d unless improve=fwd-rrep
expect route-discovery satisfied s d if improve=fwd-rrep
assert no-valid-route s d unless improve=fwd-rrep
assert route s d valid sqn=1 hops=2 nhop=a if improve=fwd-rrep
assert loop-free
""")

_builtin("fig11", "a stale reply makes an intermediate node drop the fresh one",
         ("", "improve=fwd-rrep"))("""\
nodes s a d b x
connect s a
connect a d
connect d b
inject a d "pa"
drain
inject b x "pb"
drain
inject s d "ps"
drain
expect reply-issued satisfied s d
expect route-discovery violated s d unless improve=fwd-rrep
expect route-discovery satisfied s d if improve=fwd-rrep
assert no-valid-route s d unless improve=fwd-rrep
assert route s d valid hops=2 nhop=a if improve=fwd-rrep
assert loop-free
""")

_builtin("fig13", "without updating the own sequence number a request goes unanswered",
         ("", "amb10=10b"))("""\
nodes a b d s x
connect s d
connect d a
inject d s "p0"
drain
disconnect s d
inject s d "p1"
fire s recv
fire s send d
finish s
fire s rreq d          # nobody in range
connect s d
inject a x "q1"
drain
disconnect s d
inject s d "p2"
fire s recv
fire s send d
finish s
fire s rreq d
connect s d
inject a b "q2"
drain
disconnect s d
connect s b
connect b d
inject s d "p3"
drain
assert route s d valid hops=2 nhop=b unless amb10=10b
assert no-valid-route s d if amb10=10b
expect route-discovery satisfied s d unless amb10=10b
expect route-discovery violated s d if amb10=10b
assert loop-free
""")

_builtin("fig14", "a packet is dropped after a link break but a later copy arrives", ("",))("""\
nodes s a d
connect s a
connect a d
inject s d "p0"
drain
disconnect a d
connect s d
inject s d "dp"
drain
assert not-delivered d "dp"
expect pd1 violated s d "dp"
inject s d "dp"          # the client sends the same packet again
drain
assert delivered d "dp"
expect pd3 satisfied s d "dp"
assert loop-free
""")

_builtin("fig15", "missing precursors keep the originator on a broken route",
         ("", "improve=bcast-rerr"))("""\
nodes s a b d
connect s a
connect a d
connect d b
connect b s
inject d b "q"          # s learns d via a; every precursor list stays empty
drain
assert route s d valid hops=2 nhop=a
disconnect a d
inject s d "dp"
drain
inject s d "dp"
drain
inject s d "dp"
drain
expect pd3 violated s d "dp" unless improve=bcast-rerr
expect pd3 satisfied s d "dp" if improve=bcast-rerr
assert not-delivered d "dp" unless improve=bcast-rerr
assert delivered d "dp" if improve=bcast-rerr
assert loop-free
""")

_builtin("fig16", "precursor lists are incomplete so a route error never reaches the source",
         ("", "improve=bcast-rerr"))("""\
nodes a b c d s
connect s a
connect s b
connect a b
connect a d
connect b c
connect c d
inject s d "p0"
drain
disconnect s a
disconnect s b
disconnect a b
connect s c
inject d s "dp"
drain
inject d s "dp"
drain
inject d s "dp"
drain
expect pd3 violated d s "dp" unless improve=bcast-rerr
expect pd3 satisfied d s "dp" if improve=bcast-rerr
assert loop-free
""")

_builtin("fig17", "a request that was handled once is not forwarded, leaving a long route",
         ("", "improve=fwd-rreq"))("""\
nodes a b d e f g h s
connect s d
connect s b
connect b h
connect h g
connect g f
connect f e
connect e a
connect a d
inject s d "p"
drain
assert route a s valid hops=6 nhop=e unless improve=fwd-rreq
assert route a s valid hops=2 nhop=d if improve=fwd-rreq
assert delivered d "p"
assert loop-free
""")

_builtin("fig20", "restricting the unknown-sequence-number clause keeps a longer route",
         ("", "amb2=2d", "amb2=2e"))("""\
nodes a b d s x
connect s a
connect a d
connect d b
inject a d "p1"
drain
disconnect a d
inject a d "p2"
drain
connect a d
inject b x "q"
drain
connect s d
inject s d "p3"
fire s recv
fire s rreq d          # the request reaches a and d
fire d recv            # d replies with its own sequence number
fire a recv            # under 2d a replies with the inflated one
fire s recv            # s handles d's reply first
drain
assert route s d valid sqn=2 hops=2 nhop=a if amb2=2d
assert route s d valid hops=1 nhop=d unless amb2=2d
assert loop-free
""")

_builtin("fig21", "overwriting an invalid route with an unknown sequence number loses information",
         ("", "amb2=2d", "amb2=2e", "amb2=2a"))("""\
nodes a b d s x
connect s d
connect d a
inject s d "p1"
drain
disconnect s d
inject d s "p2"
drain
connect s d
inject a x "q1"
drain
disconnect s d
inject d s "p3"
drain
connect b s
connect b d
inject s d "p4"
drain
assert no-valid-route s d if amb2=2c
assert no-valid-route s d if amb2=2d
assert route s d valid hops=2 nhop=b if amb2=2e
assert route s d valid hops=2 nhop=b if amb2=2a
expect reply-issued violated s d if amb2=2c
expect reply-issued violated s d if amb2=2d
expect route-discovery satisfied s d if amb2=2e
expect route-discovery satisfied s d if amb2=2a
assert loop-free
""")


def builtin_names() -> list:
    return sorted(BUILTINS)


def load_builtin(name: str) -> Scenario:
    try:
        return parse_scenario(BUILTINS[name][1])
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; available: {', '.join(builtin_names())}") from None


def builtin_configs(name: str) -> list:
    return [parse_config(c) for c in BUILTINS[name][2]]


def run_builtin(name: str, cfg: InterpretationConfig, **kw) -> Report:
    return run_scenario(load_builtin(name), cfg, **kw)


# exploration shapes: a scripted prefix, then events the explorer may place anywhere

_builtin("fig5-free", "the incrementing loop with the final topology changes freely interleaved",
         ("", "amb7=7b"))("""\
nodes s a b d
connect s a
connect a d
connect d b
inject s d "p1"
drain
assert route s d valid sqn=1 hops=2 nhop=a
free {
  inject b a "p2"
  disconnect a s
  disconnect a d
  inject a d "p3"
  connect a s
  connect s d
}
drain
assert loop-free unless amb7=7b
""")

_builtin("fig8-free", "the self-entry loop with the closing link breaks freely interleaved",
         ("", "amb5=5a,amb8=8a", "amb5=5a,amb8=8b", "amb5=5a,amb8=8c"))("""\
nodes a c d s x
connect s c
connect c a
connect a d
inject s d "p1"
fire s recv
fire s rreq d
connect s d
inject s x "p2"
fire s recv
fire s rreq x
fire d recv
fire s recv
disconnect s d
inject d a "pa"
fire d recv
fire d rreq a
fire a recv
fire a recv
fire c recv
fire c recv
fire a recv
connect s d
drain
connect s x
inject d x "px"
drain
assert route x d valid sqn=3 hops=2 nhop=s
free {
  disconnect a d
  inject d a "pa2"
  disconnect s d
  disconnect s c
  inject s d "p3"
}
drain
assert loop-free unless amb5=5a,amb8=8a|8b|8c
""")
