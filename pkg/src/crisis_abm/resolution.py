"""Resolution of insolvent banks: sale, public rescue, creditor rescue.

Three mechanisms are implemented:

* purchase and assumption ("pa"): the failed bank is dissolved and its
  whole balance sheet is split across the surviving solvent banks in
  proportion to their equity.  The buyers absorb the hole.
* bail-out ("bailout"): every household and firm in the economy is
  taxed pro rata to its liquid balance to refill the hole plus a fresh
  equity cushion; contributors become the new owners.
* bail-in ("bailin"): interbank creditors are written down first, the
  bank's own depositors are levied for any remainder; contributors
  become the new owners.

Either rescue falls back to purchase and assumption when it cannot
close the hole.  All three leave total money and every per-bank
balance-sheet identity intact.
"""

from __future__ import annotations

import numpy as np

from .banking import merge_loan
from .core import AccountRef, Bank, EconomyState, Loan, NoHealthyBank, debit_account

_EPS = 1e-9
_INSOLVENT = -1e-9


def detect_insolvencies(state: EconomyState) -> list[int]:
    return [b for b in state.live_banks() if state.banks[b].equity < _INSOLVENT]


def resolve_insolvencies(state: EconomyState, mechanism: str) -> None:
    """Resolve every insolvent bank, one at a time, re-testing after each.

    A rescue can itself sink another bank (bail-in hits creditors), so
    the set of insolvent banks is recomputed after every resolution.
    The order is random among those currently insolvent.
    """
    while True:
        insolvent = detect_insolvencies(state)
        if not insolvent:
            return
        if len(insolvent) > 1:
            pick = insolvent[int(state.rng.integers(len(insolvent)))]
        else:
            pick = insolvent[0]
        bank = state.banks[pick]
        hole = -bank.equity
        if mechanism == "pa":
            purchase_and_assumption(state, bank)
        elif mechanism == "bailout":
            bail_out(state, bank)
        elif mechanism == "bailin":
            bail_in(state, bank)
        else:
            raise ValueError(f"unknown mechanism {mechanism!r}")
        state.record("bank_resolved", pick, hole, mechanism=mechanism)


def _split(total: float, weights: list[float]) -> list[float]:
    """Proportional shares that sum to `total` exactly (last takes remainder)."""
    shares = [total * w for w in weights[:-1]]
    shares.append(total - sum(shares))
    return shares


def purchase_and_assumption(state: EconomyState, failed: Bank) -> None:
    """Dissolve a failed bank into the solvent survivors.

    Survivors with positive equity buy the estate in proportion to their
    equity: loans, interbank positions and cash are split pro rata; each
    deposit account moves wholesale to one buyer drawn with the same
    weights.  Buyers book assets received minus liabilities assumed, so
    their combined equity drops by exactly the failed bank's hole.
    """
    buyers = [
        state.banks[b]
        for b in state.live_banks()
        if b != failed.id and state.banks[b].equity > 0
    ]
    if not buyers:
        raise NoHealthyBank(f"no solvent buyer left for bank {failed.id}")
    total_eq = sum(b.equity for b in buyers)
    weights = [b.equity / total_eq for b in buyers]

    # firm loans: split pro rata, folding fragments into existing facilities
    for loan in failed.firm_loans:
        firm = state.firms[loan.borrower]
        firm.loans.remove(loan)
        for buyer, part in zip(buyers, _split(loan.principal, weights)):
            if part <= 0:
                continue
            buyer.equity += part
            existing = next((l for l in firm.loans if l.lender == buyer.id), None)
            if existing is not None:
                merge_loan(existing, part, loan.rate)
            else:
                frag = Loan(lender=buyer.id, borrower=firm.id, principal=part, rate=loan.rate)
                buyer.firm_loans.append(frag)
                firm.loans.append(frag)

    # interbank claims held by the failed bank
    for loan in failed.ib_assets:
        debtor = state.banks[loan.borrower]
        debtor.ib_liabilities.remove(loan)
        for buyer, part in zip(buyers, _split(loan.principal, weights)):
            if part <= 0:
                continue
            buyer.equity += part
            if buyer.id == debtor.id:
                continue  # own debt acquired: claim and liability cancel
            existing = next(
                (l for l in debtor.ib_liabilities if l.lender == buyer.id), None
            )
            if existing is not None:
                merge_loan(existing, part, loan.rate)
            else:
                frag = Loan(
                    lender=buyer.id, borrower=debtor.id, principal=part,
                    rate=loan.rate, interbank=True,
                )
                buyer.ib_assets.append(frag)
                debtor.ib_liabilities.append(frag)

    # interbank debts owed by the failed bank
    for loan in failed.ib_liabilities:
        creditor = state.banks[loan.lender]
        creditor.ib_assets.remove(loan)
        for buyer, part in zip(buyers, _split(loan.principal, weights)):
            if part <= 0:
                continue
            buyer.equity -= part
            if buyer.id == creditor.id:
                continue  # assumed its own claim: both sides written off
            existing = next(
                (l for l in buyer.ib_liabilities if l.lender == creditor.id), None
            )
            if existing is not None:
                merge_loan(existing, part, loan.rate)
            else:
                frag = Loan(
                    lender=creditor.id, borrower=buyer.id, principal=part,
                    rate=loan.rate, interbank=True,
                )
                creditor.ib_assets.append(frag)
                buyer.ib_liabilities.append(frag)

    # reserves (may be negative for an illiquid failure)
    for buyer, part in zip(buyers, _split(failed.cash, weights)):
        buyer.cash += part
        buyer.equity += part

    # deposit accounts move wholesale, one categorical draw per account
    hh_accounts = np.flatnonzero(state.hh_bank == failed.id)
    firm_accounts = [f for f in state.firms if f.bank == failed.id]
    draws = state.rng.random(hh_accounts.size + len(firm_accounts))
    cum = np.cumsum(weights)

    def pick_buyer(u: float) -> Bank:
        return buyers[int(np.searchsorted(cum, u, side="right").clip(0, len(buyers) - 1))]

    for k, idx in enumerate(hh_accounts):
        buyer = pick_buyer(draws[k])
        bal = float(state.hh_deposit[idx])
        state.hh_bank[idx] = buyer.id
        buyer.deposits_held += bal
        buyer.equity -= bal
    for k, firm in enumerate(firm_accounts):
        buyer = pick_buyer(draws[hh_accounts.size + k])
        firm.bank = buyer.id
        buyer.deposits_held += firm.cash
        buyer.equity -= firm.cash

    _delete_bank(state, failed)


def _delete_bank(state: EconomyState, bank: Bank) -> None:
    """Remove a dissolved bank and clean up ownership registers."""
    del state.banks[bank.id]
    gone: AccountRef = ("bank", bank.id)
    for other in state.banks.values():
        share = other.ownership.pop(gone, 0.0)
        if share and other.ownership:
            rest = sum(other.ownership.values())
            if rest > 0:
                for ref in other.ownership:
                    other.ownership[ref] /= rest
            else:
                other.ownership.clear()


def _levy_pro_rata(
    scope: list[tuple[AccountRef, float]], amount: float, exemption: float
) -> dict[AccountRef, float]:
    """Split `amount` over accounts pro rata to balance, capped at balance.

    Accounts below `exemption` times the largest balance in scope are
    spared.  If the caps bite, one re-pass spreads the shortfall over the
    remaining capacity; anything still missing stays uncollected.
    """
    if amount <= 0 or not scope:
        return {}
    cutoff = exemption * max(bal for _, bal in scope)
    eligible = [(ref, bal) for ref, bal in scope if bal > 0 and bal >= cutoff]
    if not eligible:
        return {}
    total = sum(bal for _, bal in eligible)
    levies = {ref: min(amount * bal / total, bal) for ref, bal in eligible}
    shortfall = amount - sum(levies.values())
    if shortfall > _EPS:
        headroom = [(ref, bal - levies[ref]) for ref, bal in eligible if bal - levies[ref] > _EPS]
        room_total = sum(room for _, room in headroom)
        if room_total > 0:
            for ref, room in headroom:
                levies[ref] += min(shortfall * room / room_total, room)
    return {ref: levy for ref, levy in levies.items() if levy > 0}


def _collect_levies(
    state: EconomyState, bank: Bank, levies: dict[AccountRef, float]
) -> float:
    """Debit each account and book the proceeds as fresh equity at `bank`."""
    collected = 0.0
    for ref, levy in levies.items():
        debit_account(state, ref, levy)
        bank.cash += levy
        bank.equity += levy
        collected += levy
    return collected


def bail_out(state: EconomyState, bank: Bank) -> None:
    """Recapitalise from a one-off levy on all households and firms.

    The target is the equity hole plus a fresh cushion.  Contributions
    are pro rata to liquid balances (small balances can be exempt) and
    buy ownership in the rescued bank.  If the levy cannot close the
    hole the bank is sold off the usual way instead.
    """
    p = state.params
    need = -bank.equity + p.recap_overhead
    scope: list[tuple[AccountRef, float]] = [
        (("hh", i), float(state.hh_deposit[i])) for i in range(state.n_households)
    ]
    scope += [(("firm", f.id), f.cash) for f in state.firms]
    levies = _levy_pro_rata(scope, need, p.insurance_exemption)
    collected = _collect_levies(state, bank, levies)
    if bank.equity < _INSOLVENT:
        state.record("rescue_shortfall", bank.id, need - collected, mechanism="bailout")
        purchase_and_assumption(state, bank)
        return
    bank.ownership = {ref: levy / collected for ref, levy in levies.items()}
    state.record("bailout", bank.id, collected, n_contributors=len(levies))


def bail_in(state: EconomyState, bank: Bank) -> None:
    """Recapitalise from the bank's own creditors and depositors.

    Interbank debts are converted to equity first, pro rata across the
    claims; if the hole plus cushion is not yet covered the bank's own
    depositors are levied.  Contributors (creditor banks, then levied
    depositors) become the new owners.  Falls back to a sale if even
    that cannot restore solvency.
    """
    p = state.params
    need = -bank.equity + p.recap_overhead
    contributions: dict[AccountRef, float] = {}

    claims = list(bank.ib_liabilities)
    total_claims = sum(l.principal for l in claims)
    converted = min(total_claims, need)
    if converted > 0:
        parts = _split(converted, [l.principal / total_claims for l in claims])
        for loan, part in zip(claims, parts):
            if part <= 0:
                continue
            creditor = state.banks[loan.lender]
            creditor.equity -= part
            bank.equity += part
            loan.principal -= part
            contributions[("bank", creditor.id)] = (
                contributions.get(("bank", creditor.id), 0.0) + part
            )
            if loan.principal <= _EPS:
                creditor.ib_assets.remove(loan)
                bank.ib_liabilities.remove(loan)

    residual = need - converted
    if residual > _EPS:
        scope: list[tuple[AccountRef, float]] = [
            (("hh", int(i)), float(state.hh_deposit[i]))
            for i in np.flatnonzero(state.hh_bank == bank.id)
        ]
        scope += [(("firm", f.id), f.cash) for f in state.firms if f.bank == bank.id]
        levies = _levy_pro_rata(scope, residual, p.insurance_exemption)
        _collect_levies(state, bank, levies)
        for ref, levy in levies.items():
            contributions[ref] = contributions.get(ref, 0.0) + levy

    if bank.equity < _INSOLVENT:
        shortfall = need - sum(contributions.values())
        state.record("rescue_shortfall", bank.id, shortfall, mechanism="bailin")
        purchase_and_assumption(state, bank)
        return
    total = sum(contributions.values())
    if total > 0:
        bank.ownership = {ref: c / total for ref, c in contributions.items()}
    state.record(
        "bailin", bank.id, total,
        converted=converted, levied=total - converted,
    )
