"""Bank-side mechanics: loan pricing, prudential limits, repayment flows.

Banks price loans off a common refinancing rate with an idiosyncratic
markup and a borrower-risk markup that grows with the borrower's
leverage.  Two prudential rules cap what a bank may lend: a minimum
cash-to-deposits reserve and a maximum loan-book-to-equity leverage.
"""

from __future__ import annotations

import math

from .core import Bank, EconomyState, Firm, Loan, debit_account

_EPS = 1e-9
# facilities amortise geometrically and never hit zero exactly; residuals
# below this are written off so books stay finite
_CLOSE = 1e-6


def firm_leverage(debt: float, cash: float) -> float:
    """Debt over own liquid funds; infinite when indebted with no cash."""
    if debt <= 0:
        return 0.0
    # dust balances count as no funds (also keeps the ratio finite-safe)
    if cash <= _EPS * _EPS:
        return math.inf
    return debt / cash


def offer_rate(base_rate: float, markup_coeff: float, leverage: float, eps: float) -> float:
    """Contractual rate: base, bank markup (1+eps), risk markup 1+tanh(k*l).

    The risk factor saturates at 2 for an infinitely leveraged borrower,
    so the offer always lies in [base*(1+eps), 2*base*(1+eps)].
    """
    if math.isinf(leverage):
        risk = 2.0
    else:
        risk = 1.0 + math.tanh(markup_coeff * leverage)
    return base_rate * (1.0 + eps) * risk


def lending_capacity(bank: Bank, reserve_ratio: float, max_leverage: float) -> float:
    """Largest loan the bank can extend under both prudential rules."""
    if bank.equity <= 0:
        return 0.0
    leverage_room = max_leverage * bank.equity - bank.loan_assets()
    cash_room = bank.cash - reserve_ratio * bank.deposits_held
    return max(0.0, min(leverage_room, cash_room))


def merge_loan(book_entry: Loan, principal: float, rate: float) -> None:
    """Fold a new slice into an existing facility at the blended rate.

    Keeping one facility per lender/borrower pair bounds the book size;
    the volume-weighted rate preserves every aggregate flow (interest,
    amortisation, averages) exactly.
    """
    total = book_entry.principal + principal
    book_entry.rate = (book_entry.rate * book_entry.principal + rate * principal) / total
    book_entry.principal = total


def grant_loan(state: EconomyState, lender: Bank, firm_id: int, amount: float, rate: float) -> Loan:
    """Disburse a firm loan: lender swaps cash for a claim, borrower is credited."""
    firm = state.firms[firm_id]
    loan = next((l for l in firm.loans if l.lender == lender.id), None)
    if loan is not None:
        merge_loan(loan, amount, rate)
    else:
        loan = Loan(lender=lender.id, borrower=firm_id, principal=amount, rate=rate)
        lender.firm_loans.append(loan)
        firm.loans.append(loan)
    lender.cash -= amount
    # credit the borrower's operating account at its house bank
    firm.cash += amount
    house = state.banks[firm.bank]
    house.cash += amount
    house.deposits_held += amount
    return loan


def raise_interbank(state: EconomyState, borrower: Bank, amount: float) -> float:
    """Borrow reserves from up to `n_applications` random peers.

    Peers apply the same prudential limits as for firm loans and may fill
    the request only partially.  Returns the amount actually raised.
    """
    p = state.params
    peers = [b for b in state.live_banks() if b != borrower.id]
    if not peers or amount <= _EPS:
        return 0.0
    k = min(p.n_applications, len(peers))
    picks = state.rng.choice(len(peers), size=k, replace=False)
    remaining = amount
    for i in picks:
        peer = state.banks[peers[int(i)]]
        can = min(remaining, lending_capacity(peer, p.reserve_ratio, p.max_bank_leverage))
        if can <= _EPS:
            continue
        loan = next((l for l in borrower.ib_liabilities if l.lender == peer.id), None)
        if loan is not None:
            merge_loan(loan, can, p.interbank_rate)
        else:
            loan = Loan(
                lender=peer.id, borrower=borrower.id, principal=can,
                rate=p.interbank_rate, interbank=True,
            )
            peer.ib_assets.append(loan)
            borrower.ib_liabilities.append(loan)
        peer.cash -= can
        borrower.cash += can
        remaining -= can
        if remaining <= _EPS:
            break
    return amount - remaining


def _apply_loan_payment(
    state: EconomyState, loan: Loan, payment: float, pay_from_bank: Bank | None
) -> None:
    """Route one payment: interest first (lender income), then principal."""
    lender = state.banks[loan.lender]
    interest_due = loan.rate * loan.principal
    interest = min(payment, interest_due)
    principal_part = payment - interest

    if pay_from_bank is not None:
        pay_from_bank.cash -= payment
        pay_from_bank.equity -= interest
        pay_from_bank.interest_expense += interest
    else:
        # service is due in full; a short account goes into overdraft
        debit_account(state, ("firm", loan.borrower), payment, allow_overdraft=True)

    lender.cash += payment
    lender.equity += interest
    lender.interest_income += interest
    loan.principal -= principal_part


def prepay_firm_debt(state: EconomyState, firm: Firm, amount: float) -> float:
    """Retire principal ahead of schedule, pro rata across loans.

    Pure balance-sheet swap on the lender side: cash in, claim out, equity
    untouched.  Interest is never prepaid; the scheduled service already
    charged it on the balance outstanding this step.  Returns cash paid.
    """
    total = firm.debt()
    if total <= _EPS or amount <= _EPS:
        return 0.0
    amount = min(amount, total, max(firm.cash, 0.0))
    if amount <= _EPS:
        return 0.0
    paid = 0.0
    for loan in list(firm.loans):
        pay = min(amount * loan.principal / total, loan.principal)
        if pay <= _EPS:
            continue
        debit_account(state, ("firm", firm.id), pay)
        lender = state.banks[loan.lender]
        lender.cash += pay
        loan.principal -= pay
        paid += pay
        if loan.principal <= _CLOSE:
            _forgive_residual(lender, loan)
            lender.firm_loans.remove(loan)
            firm.loans.remove(loan)
    return paid


def repay_firm_loans(state: EconomyState, firm_id: int) -> float:
    """Scheduled service on a firm's loans, debited in full.

    Each loan is due one amortisation slice of principal plus interest on
    the outstanding balance.  The account is debited even when it lacks
    funds: the shortfall becomes an overdraft at the house bank, widens
    the next step's financing gap, and ultimately drives the bankruptcy
    check.  This is what retires chronically unprofitable borrowers; a
    gentler cash-capped schedule lets them roll their debt forever.
    Returns the cash paid.
    """
    firm = state.firms[firm_id]
    if not firm.loans:
        return 0.0
    p = state.params
    paid = 0.0
    for loan in list(firm.loans):
        due = (p.repayment_rate + loan.rate) * loan.principal
        if due <= _EPS:
            continue
        _apply_loan_payment(state, loan, due, pay_from_bank=None)
        paid += due
        if loan.principal <= _CLOSE:
            _forgive_residual(state.banks[loan.lender], loan)
            state.banks[loan.lender].firm_loans.remove(loan)
            firm.loans.remove(loan)
    return paid


def repay_interbank(state: EconomyState, bank_id: int) -> float:
    """Scheduled service on a bank's interbank liabilities, debited in full.

    Reserves move lender-ward even if that leaves the borrower overdrawn;
    the liquidity-management phase then tries to refinance the hole.
    """
    bank = state.banks[bank_id]
    if not bank.ib_liabilities:
        return 0.0
    p = state.params
    paid = 0.0
    for loan in list(bank.ib_liabilities):
        due = (p.repayment_rate + loan.rate) * loan.principal
        if due <= _EPS:
            continue
        _apply_loan_payment(state, loan, due, pay_from_bank=bank)
        paid += due
        if loan.principal <= _CLOSE:
            _forgive_residual(state.banks[loan.lender], loan, borrower=bank)
            state.banks[loan.lender].ib_assets.remove(loan)
            bank.ib_liabilities.remove(loan)
    return paid


def _forgive_residual(lender: Bank, loan: Loan, borrower: Bank | None = None) -> None:
    """Clear float dust left on a fully amortised loan before removal."""
    if loan.principal != 0.0:
        lender.equity -= loan.principal
        if borrower is not None:
            borrower.equity += loan.principal
        loan.principal = 0.0


def _distribute_to_owners(state: EconomyState, bank: Bank, amount: float) -> None:
    """Pay `amount` out of bank capital to the ownership register, pro rata.

    Owners can be households, firms, or other banks (after an open-bank
    rescue changed the register).  A payment to a depositor of the paying
    bank itself nets out in reserves and simply converts equity into a
    deposit liability; the flows below handle that case without special
    treatment.
    """
    bank.cash -= amount
    bank.equity -= amount
    for ref, share in bank.ownership.items():
        part = amount * share
        if part <= 0:
            continue
        kind, idx = ref
        if kind == "hh":
            state.hh_deposit[idx] += part
            holder = state.banks[int(state.hh_bank[idx])]
            holder.cash += part
            holder.deposits_held += part
        elif kind == "firm":
            firm = state.firms[idx]
            firm.cash += part
            holder = state.banks[firm.bank]
            holder.cash += part
            holder.deposits_held += part
        else:  # another bank: dividend received is income
            other = state.banks[idx]
            other.cash += part
            other.equity += part


def pay_bank_dividends(state: EconomyState, bank: Bank) -> float:
    """Distribute a share of this step's positive operating profit.

    Operating profit is interest earned minus interest paid.  Credit
    write-offs are not run through the dividend base: they impair equity
    directly when a borrower fails, the way extraordinary losses hit
    capital rather than the earnings available for distribution.  The
    payout is limited by the bank's cash.
    """
    profit = bank.interest_income - bank.interest_expense
    if profit <= 0 or bank.cash <= 0 or not bank.ownership:
        return 0.0
    payout = min(state.params.dividend_fraction * profit, bank.cash)
    if payout <= _EPS:
        return 0.0
    _distribute_to_owners(state, bank, payout)
    return payout


def restore_liquidity(state: EconomyState, bank: Bank) -> float:
    """Pull interbank funds when reserves have gone negative.

    The target is to get back above the reserve floor.  Failing to raise
    enough is not itself an event: an illiquid bank simply stays short
    and its overdraft shows up as negative cash until flows turn.
    """
    p = state.params
    if bank.cash >= 0:
        return 0.0
    need = p.reserve_ratio * max(bank.deposits_held, 0.0) - bank.cash
    return raise_interbank(state, bank, need)


def nominal_loan_rate(state: EconomyState) -> float:
    """Volume-weighted average contractual rate on outstanding firm loans."""
    num = 0.0
    den = 0.0
    for bank in state.banks.values():
        for loan in bank.firm_loans:
            num += loan.rate * loan.principal
            den += loan.principal
    return num / den if den > 0 else 0.0


def firm_loan_volume(state: EconomyState) -> float:
    """Total outstanding principal lent to firms."""
    return sum(
        loan.principal for bank in state.banks.values() for loan in bank.firm_loans
    )
