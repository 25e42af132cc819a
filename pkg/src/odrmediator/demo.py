"""Offline demo fixtures.

Five fictitious disputes plus the canned completions that make the
scripted provider answer them: neutral-tone rewrites for three
inflammatory drafts, mediator drafts for the broken-camera case (with
and without steering instructions), and autonomous interventions for
the other four cases. The bundled data/demo_script.json is generated
from these tables so the one-command demo and the test suite share one
source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import Dispute, ParticipantRole, ROLE_LABELS, TriggerPolicySet
from .engine import MediationEngine

# (original draft, neutral-tone rewrite) pairs for the reformulation demo.
REFORMULATION_PAIRS: tuple[tuple[str, str], ...] = (
    (
        "What the ****? I told you about the water leak weeks ago and you did "
        "nothing! Fix it or I will see you in court!",
        "I wanted to remind you that I brought up the water leak issue a few "
        "weeks ago. It would be great if we could find a solution to address "
        "it before considering legal action.",
    ),
    (
        "You still have not repaid me the 1000 USD I lent you! You are the "
        "worst friend ever, we are done!",
        "It seems that the 1000 USD I lent you hasn't been repaid yet. As "
        "friends, let's discuss this issue and work towards resolving it "
        "amicably.",
    ),
    (
        "Here is what happened: I told you that the tree was hanging over my "
        "lawn many on the 3rd of April. On the 15th, it was still there, so I "
        "cut it down. This is your ******* fault, you could have fixed it!!",
        "I noticed on April 3rd that the tree was overhanging my lawn. "
        "Despite addressing the issue, it remained unchanged by the 15th, "
        "which led me to cut it down. I believe this situation could have "
        "been avoided if timely action was taken on your part.",
    ),
)


@dataclass(frozen=True)
class DemoDispute:
    key: str
    title: str
    party_a: tuple[str, str]  # (participant id, display name)
    party_b: tuple[str, str]
    messages: tuple[tuple[str, str], ...]  # (author id, body), chronological


CAMERA = DemoDispute(
    key="camera",
    title="Broken camera",
    party_a=("john", "John"),
    party_b=("jane", "Jane"),
    messages=(
        ("jane", "The camera I bought from you arrived broken. I would like a refund or a replacement."),
        ("john", "The camera was working perfectly when I shipped it. The postal service must have damaged it in transit."),
        ("jane", "You were the one who packed it, so please take responsibility for how it arrived."),
        ("john", "Why should I be liable when the postal service is clearly at fault?"),
    ),
)

WATER_LEAK = DemoDispute(
    key="water_leak",
    title="Water leak repairs",
    party_a=("john", "John"),
    party_b=("jane", "Jane"),
    messages=(
        ("jane", "I reported the water leak to you five weeks ago and nothing has happened. I want it repaired and compensation for the damage to my belongings."),
        ("john", "This is the first I am hearing about any water leak. You never informed me."),
    ),
)

SNOW = DemoDispute(
    key="snow",
    title="Fall on an uncleared road",
    party_a=("john", "John"),
    party_b=("jane", "Jane"),
    messages=(
        ("john", "I slipped on the snow in front of your apartment and could not work for two weeks. I am asking for my lost wages."),
        ("jane", "I cleared the snow that very morning, so I do not see how I am responsible for your fall."),
    ),
)

LOAN = DemoDispute(
    key="loan",
    title="Unpaid 400 CAD loan",
    party_a=("john", "John"),
    party_b=("jane", "Jane"),
    messages=(
        ("jane", "You borrowed 400 CAD from me to pay off your credit card. I need it back, with interest."),
        ("john", "I know, and I promised to repay you with my next paycheck."),
        ("jane", "That was months ago. When exactly do you plan to pay?"),
        ("john", "I lost my job since then. I am unemployed and cannot repay the money right now."),
    ),
)

SEEDS = DemoDispute(
    key="seeds",
    title="Seed order never delivered",
    party_a=("john", "John"),
    party_b=("jane", "Jane"),
    messages=(
        ("jane", "I ordered seeds from your website three weeks ago and never received anything!"),
        ("john", "I have no record of any order from you."),
        ("jane", "This is outrageous! You took my money and sent nothing. Give me my order or my money back!"),
        ("john", "Do not accuse me. There is simply no order under your name in my system."),
    ),
)

DEMO_DISPUTES: tuple[DemoDispute, ...] = (CAMERA, WATER_LEAK, SNOW, LOAN, SEEDS)

# Mediator steering instructions for the camera case.
CAMERA_INSTRUCTION_INSURANCE = (
    "Inquire whether there might be an insurance offered by the trading platform used"
)
CAMERA_INSTRUCTION_CLARIFY = (
    "Ask the parties to clarify the model, value and state of the sold good."
)

# Mediator drafts for the camera case, keyed by instructions (None = no
# instructions; the scripted provider then keys on the final user turn).
CAMERA_DRAFTS: tuple[tuple[str | None, str], ...] = (
    (
        None,
        "Thank you for expressing your concern, John. It's clear that the "
        "situation isn't ideal for either party. One possible solution could "
        "be to file a claim with the postal service to seek reimbursement for "
        "the damaged camera. That way, Jane can receive compensation for the "
        "broken camera and the responsibility would shift to the postal "
        "service. Would both of you be open to trying this approach to reach "
        "a resolution?",
    ),
    (
        CAMERA_INSTRUCTION_INSURANCE,
        "John, I understand your concern. It might be possible that the "
        "trading platform you have used for the transaction offers some form "
        "of insurance or buyer/seller protection. In order to consider this "
        "as an option, could you please let us know which platform you used "
        "for the transaction and if they offer anything in this regard? This "
        "might help both of you reach a fair and amicable resolution.",
    ),
    (
        CAMERA_INSTRUCTION_CLARIFY,
        "I understand your concerns, John. However, it's important to "
        "consider that part of the responsibility lies in the packaging of "
        "the item to ensure its safe delivery. In order to evaluate the "
        "options more fairly, could both of you please provide more "
        "information about the camera, such as the model and the estimated "
        "value, as well as its condition at the time of the sale? This will "
        "allow us to further discuss the possible solutions mentioned earlier "
        "and find a resolution that both parties find satisfactory.",
    ),
)

# Autonomous interventions, keyed by demo dispute.
AUTONOMOUS_INTERVENTIONS: dict[str, str] = {
    "water_leak": (
        "As a mediator, I would like to help Jane and John resolve this "
        "issue. It appears there may be a misunderstanding about the "
        "communication taken place. Firstly, let's try to establish the "
        "facts. Jane, could you please provide more information about when "
        "and how you informed John about the water leak? And John, is there "
        "any possibility that you might have missed or overlooked this "
        "communication? Let's work together to find a fair and acceptable "
        "solution for both parties."
    ),
    "snow": (
        "As your mediator, I understand that both of you have concerns and "
        "perspectives on this issue. John, you experienced an accident that "
        "resulted in lost wages due to the snow outside Jane's apartment. "
        "Jane, you claim that you had cleared the snow earlier that day. To "
        "move forward, let's first establish the extent of responsibility "
        "each party has in this situation. This includes discussing the "
        "circumstances of the accident further and any relevant information, "
        "such as local laws or regulations regarding snow removal. Would you "
        "both be willing to discuss in more detail the specifics of the "
        "incident and the snow removal practices at Jane's apartment? This "
        "way we can better understand the situation and work towards an "
        "amicable agreement."
    ),
    "loan": (
        "Thank you for providing more context about the situation. It seems "
        "like the initial agreement was informal and based on John's promise "
        "to repay when he got his next paycheck. However, John is currently "
        "unemployed, which makes the repayment more challenging. As a "
        "suggestion, would both of you be open to discussing a repayment "
        "plan that takes John's current financial situation into "
        "consideration without burdening Jane? This could include "
        "re-assessing the interest or agreeing on a feasible timeframe to "
        "repay the debt."
    ),
    "seeds": (
        "As the mediator in this situation, I would like to remind both "
        "parties to remain respectful during this discussion. Jane, I "
        "understand that you have concerns regarding the status of your "
        "order, and John, I hear that you have no record of the transaction. "
        "Let's try to work together to identify and resolve the issue. Jane, "
        "would you mind providing any evidence or details regarding your "
        "order, such as a transaction ID, order number, or a confirmation "
        "email? This will help John to verify your order in his system. "
        "John, please be patient while we gather this information, and once "
        "we have it, I kindly ask you to look into your system to confirm "
        "Jane's order. By acting in a respectful and cooperative manner we "
        "can work on finding a solution that satisfies both parties."
    ),
}

DEFAULT_DEMO_RESPONSE = (
    "Thank you both for sharing your perspectives. Could each of you "
    "describe what outcome would feel fair, so we can look for common ground?"
)


def final_prompt_line(fixture: DemoDispute) -> str:
    """The last context line a mediator prompt renders for this fixture.

    Scripted provider entries for context-keyed responses match on it.
    """
    author_id, body = fixture.messages[-1]
    names = {fixture.party_a[0]: fixture.party_a[1], fixture.party_b[0]: fixture.party_b[1]}
    # Demo fixtures always end on a party message.
    party_label = ROLE_LABELS[ParticipantRole.PARTY_A]
    return f"{names[author_id]} ({party_label}): {body}"


def build_demo_script() -> list[dict]:
    """Script entries answering every demo flow; see providers.load_script."""
    entries: list[dict] = []
    for original, rewrite in REFORMULATION_PAIRS:
        entries.append({"match": original, "response": rewrite})
    for instructions, draft in CAMERA_DRAFTS:
        if instructions is None:
            entries.append({"match": final_prompt_line(CAMERA), "response": draft})
        else:
            entries.append({"match": instructions, "response": draft})
    for key, intervention in AUTONOMOUS_INTERVENTIONS.items():
        fixture = next(f for f in DEMO_DISPUTES if f.key == key)
        entries.append({"match": final_prompt_line(fixture), "response": intervention})
    entries.append({"match": None, "response": DEFAULT_DEMO_RESPONSE})
    return entries


def seed_dispute(
    engine: MediationEngine,
    fixture: DemoDispute,
    policy: TriggerPolicySet | None = None,
    *,
    mediator: tuple[str, str] | None = ("maria", "Maria"),
) -> Dispute:
    """Create a dispute and replay its fixture conversation verbatim.

    Messages are seeded with force_send so detection never interferes
    with fixture setup.
    """
    dispute = engine.create_dispute(
        fixture.title,
        fixture.party_a[1],
        fixture.party_b[1],
        policy,
        party_a_id=fixture.party_a[0],
        party_b_id=fixture.party_b[0],
        mediator=mediator[1] if mediator else None,
        mediator_id=mediator[0] if mediator else None,
    )
    for author_id, body in fixture.messages:
        engine.submit_party_message(dispute.id, author_id, body, force_send=True)
    return engine.get_dispute(dispute.id)


def seed_all(engine: MediationEngine) -> dict[str, Dispute]:
    return {fixture.key: seed_dispute(engine, fixture) for fixture in DEMO_DISPUTES}
