"""The mock service catalog: schemas and deterministic behaviors.

Services mirror the kinds of servers agent benchmarks exercise — a shop, a
bank, a workspace, a chat system — plus the small banking pair and the
three-server arithmetic chain used by the golden scenarios.  Behaviors are
simple deterministic functions over scenario state; mutating tools append
or update in call order.
"""

from __future__ import annotations

from decimal import Decimal

from ..values import Value, arith, dec
from .registry import ParamSpec, ToolRegistry, ToolSpec
from .scenario import Handler, ToolExecutionError


def _p(name: str, type_: str = "text", optional: bool = False) -> ParamSpec:
    return ParamSpec(name, type_, optional)


def _rec(**fields: dict) -> dict:
    return {"type": "record", "fields": fields}


def _list_of(item: dict) -> dict:
    return {"type": "list", "item": item}


_T = {"type": "text"}
_N = {"type": "number"}
_I = {"type": "int"}
_B = {"type": "bool"}


def _zero() -> Decimal:
    return dec("0.0")


# -- shop ---------------------------------------------------------------

def _product(state: dict, name: str) -> dict:
    return state.get("products", {}).get(name, {"price": _zero(), "stock": 0})


def shop_get_product_details(state: dict, args: tuple) -> Value:
    p = _product(state, args[0])
    return {"price": p["price"], "stock": p["stock"]}


def shop_list_products(state: dict, args: tuple) -> Value:
    name_filter, max_price = args
    out = []
    for name in sorted(state.get("products", {})):
        p = state["products"][name]
        if name_filter is not None and name_filter not in name:
            continue
        if max_price is not None and p["price"] > max_price:
            continue
        out.append({"name": name, "price": p["price"]})
    return out


def shop_add_to_cart(state: dict, args: tuple) -> Value:
    name, quantity = args
    p = _product(state, name)
    if p["stock"] < quantity:
        return False
    state.setdefault("cart", []).append({"name": name, "price": p["price"], "quantity": quantity})
    return True


def shop_get_cart_summary(state: dict, args: tuple) -> Value:
    total: Value = _zero()
    for item in state.get("cart", []):
        total = arith("+", total, arith("*", item["price"], item["quantity"]))
    return {"total": total}


def shop_get_order_history(state: dict, args: tuple) -> Value:
    return [dict(o) for o in state.get("orders", [])]


def shop_write_review(state: dict, args: tuple) -> Value:
    name, rating, comment = args
    state.setdefault("reviews", []).append({"name": name, "rating": rating, "comment": comment})
    return True


def shop_set_shipping_address(state: dict, args: tuple) -> Value:
    street, city, country = args
    state["shipping_address"] = {"street": street, "city": city, "country": country}
    return True


def shop_apply_coupon(state: dict, args: tuple) -> Value:
    code = args[0]
    known = state.get("coupons", [])
    if code not in known:
        return False
    state.setdefault("applied_coupons", []).append(code)
    return True


# -- bank ---------------------------------------------------------------

def bank_send_money(state: dict, args: tuple) -> Value:
    iban, amount, subject, date = args
    state.setdefault("sent", []).append({"recipient": iban, "amount": amount, "subject": subject, "date": date})
    return True


def bank_get_iban(state: dict, args: tuple) -> Value:
    return state.get("iban", "")


def bank_get_most_recent_transactions(state: dict, args: tuple) -> Value:
    n = args[0]
    txs = state.get("transactions", [])
    return [dict(t) for t in txs[:n]]


def bank_get_scheduled_transactions(state: dict, args: tuple) -> Value:
    return [dict(t) for t in state.get("scheduled", [])]


def bank_update_scheduled_transaction(state: dict, args: tuple) -> Value:
    txn_id, recipient, amount, subject, date, recurring = args
    for t in state.get("scheduled", []):
        if t["id"] == txn_id:
            t["recipient"] = recipient
            t["amount"] = amount
            if subject is not None:
                t["subject"] = subject
            if date is not None:
                t["date"] = date
            if recurring is not None:
                t["recurring"] = recurring
            return True
    return False


def bank_update_user_info(state: dict, args: tuple) -> Value:
    first, last, street, city = args
    info = state.setdefault("user_info", {})
    if first:
        info["first_name"] = first
    if last:
        info["last_name"] = last
    info["street"] = street
    info["city"] = city
    return True


def bank_get_balance(state: dict, args: tuple) -> Value:
    return state.get("balance", _zero())


# -- golden banking pair (card issuer / checking account) ----------------

def citi_get_balance(state: dict, args: tuple) -> Value:
    account = args[0]
    balances = state.get("balances", {})
    if account not in balances:
        raise ToolExecutionError(f"unknown account {account!r}")
    return balances[account]


def chase_transfer(state: dict, args: tuple) -> Value:
    sender, recipient, amount = args
    state.setdefault("transfers", []).append({"sender": sender, "recipient": recipient, "amount": amount})
    return True


# -- three-server arithmetic chain ---------------------------------------

def f_f(state: dict, args: tuple) -> Value:
    return arith("+", args[0], state.get("offset", 0))


def g_g(state: dict, args: tuple) -> Value:
    return arith("+", arith("*", args[0], state.get("scale", 1)), state.get("offset", 0))


def h_h(state: dict, args: tuple) -> Value:
    state.setdefault("accepted", []).append(args[0])
    return True


# -- workspace ------------------------------------------------------------

def workspace_get_unread_emails(state: dict, args: tuple) -> Value:
    return [dict(m) for m in state.get("unread", [])]


def workspace_send_email(state: dict, args: tuple) -> Value:
    to, subject, body = args
    state.setdefault("outbox", []).append({"to": to, "subject": subject, "body": body})
    return True


def workspace_create_event(state: dict, args: tuple) -> Value:
    title, date, start_time = args
    events = state.setdefault("events", [])
    event_id = f"evt-{len(events) + 1}"
    events.append({"id": event_id, "title": title, "date": date, "start_time": start_time})
    return {"event_id": event_id}


def workspace_search_files(state: dict, args: tuple) -> Value:
    query = args[0]
    return [dict(f) for f in state.get("files", []) if query in f["name"]]


def workspace_delete_file(state: dict, args: tuple) -> Value:
    name = args[0]
    files = state.get("files", [])
    kept = [f for f in files if f["name"] != name]
    state["files"] = kept
    return len(kept) < len(files)


# -- chat ------------------------------------------------------------------

def chat_get_channels(state: dict, args: tuple) -> Value:
    return list(state.get("channels", {}).keys())


def chat_read_channel_messages(state: dict, args: tuple) -> Value:
    channel = args[0]
    return [dict(m) for m in state.get("channels", {}).get(channel, [])]


def chat_send_channel_message(state: dict, args: tuple) -> Value:
    channel, message = args
    state.setdefault("channels", {}).setdefault(channel, []).append({"sender": "me", "body": message})
    return True


def chat_add_user_to_channel(state: dict, args: tuple) -> Value:
    user, channel = args
    state.setdefault("members", {}).setdefault(channel, []).append(user)
    return True


_CATALOG: list[tuple[ToolSpec, Handler]] = [
    (ToolSpec("shop", "get_product_details", (_p("product_name"),),
              _rec(price=_N, stock=_I), read_only=True,
              description="Price and stock for a product."), shop_get_product_details),
    (ToolSpec("shop", "list_products", (_p("name_filter", "text", True), _p("max_price", "number", True)),
              _list_of(_rec(name=_T, price=_N)), read_only=True,
              description="Products matching a name substring and price cap."), shop_list_products),
    (ToolSpec("shop", "add_to_cart", (_p("product_name"), _p("quantity", "int")),
              _B, description="Add a quantity of a product to the cart; false if out of stock."), shop_add_to_cart),
    (ToolSpec("shop", "get_cart_summary", (), _rec(total=_N), read_only=True,
              description="Current cart total."), shop_get_cart_summary),
    (ToolSpec("shop", "get_order_history", (), _list_of(_rec(name=_T, price=_N, date=_T)), read_only=True,
              description="Past orders."), shop_get_order_history),
    (ToolSpec("shop", "write_review", (_p("product_name"), _p("rating", "int"), _p("comment")),
              _B, description="Leave a product review."), shop_write_review),
    (ToolSpec("shop", "set_shipping_address", (_p("street"), _p("city"), _p("country")),
              _B, description="Set the delivery address."), shop_set_shipping_address),
    (ToolSpec("shop", "apply_coupon", (_p("code"),), _B,
              description="Apply a coupon code; false if unknown."), shop_apply_coupon),

    (ToolSpec("bank", "send_money", (_p("iban"), _p("amount", "number"), _p("subject"), _p("date")),
              _B, description="Transfer money to an IBAN."), bank_send_money),
    (ToolSpec("bank", "get_iban", (), _T, read_only=True,
              description="The user's own IBAN."), bank_get_iban),
    (ToolSpec("bank", "get_most_recent_transactions", (_p("n", "int"),),
              _list_of(_rec(sender=_T, recipient=_T, amount=_N, subject=_T, date=_T)), read_only=True,
              description="The n most recent transactions."), bank_get_most_recent_transactions),
    (ToolSpec("bank", "get_scheduled_transactions", (),
              _list_of(_rec(id=_I, recipient=_T, amount=_N, subject=_T, date=_T)), read_only=True,
              description="Standing orders."), bank_get_scheduled_transactions),
    (ToolSpec("bank", "update_scheduled_transaction",
              (_p("id", "int"), _p("recipient"), _p("amount", "number"),
               _p("subject", "text", True), _p("date", "text", True), _p("recurring", "bool", True)),
              _B, description="Update a standing order by id."), bank_update_scheduled_transaction),
    (ToolSpec("bank", "update_user_info", (_p("first_name"), _p("last_name"), _p("street"), _p("city")),
              _B, description="Update account holder information."), bank_update_user_info),
    (ToolSpec("bank", "get_balance", (), _N, read_only=True,
              description="Current account balance."), bank_get_balance),

    (ToolSpec("Citi", "getBalance", (_p("account"),), _N, read_only=True,
              description="Credit card balance for an account."), citi_get_balance),
    (ToolSpec("Chase", "transfer", (_p("sender"), _p("recipient"), _p("amount", "number")),
              _B, description="Transfer from a checking account."), chase_transfer),

    (ToolSpec("F", "f", (_p("x", "number"),), _N, read_only=True,
              description="F's computation."), f_f),
    (ToolSpec("G", "g", (_p("x", "number"),), _N, read_only=True,
              description="G's computation."), g_g),
    (ToolSpec("H", "h", (_p("x", "number"),), _B,
              description="H's action."), h_h),

    (ToolSpec("workspace", "get_unread_emails", (), _list_of(_rec(sender=_T, subject=_T, body=_T)),
              read_only=True, description="Unread inbox messages."), workspace_get_unread_emails),
    (ToolSpec("workspace", "send_email", (_p("to"), _p("subject"), _p("body")), _B,
              description="Send an email."), workspace_send_email),
    (ToolSpec("workspace", "create_event", (_p("title"), _p("date"), _p("start_time")),
              _rec(event_id=_T), description="Create a calendar event."), workspace_create_event),
    (ToolSpec("workspace", "search_files", (_p("query"),), _list_of(_rec(name=_T, size=_I)),
              read_only=True, description="Files whose names contain the query."), workspace_search_files),
    (ToolSpec("workspace", "delete_file", (_p("name"),), _B,
              description="Delete a file by exact name."), workspace_delete_file),

    (ToolSpec("chat", "get_channels", (), _list_of(_T), read_only=True,
              description="All channel names."), chat_get_channels),
    (ToolSpec("chat", "read_channel_messages", (_p("channel"),), _list_of(_rec(sender=_T, body=_T)),
              read_only=True, description="Messages in a channel."), chat_read_channel_messages),
    (ToolSpec("chat", "send_channel_message", (_p("channel"), _p("message")), _B,
              description="Post a message to a channel."), chat_send_channel_message),
    (ToolSpec("chat", "add_user_to_channel", (_p("user"), _p("channel")), _B,
              description="Invite a user into a channel."), chat_add_user_to_channel),
]


def service_catalog() -> dict[str, tuple[ToolSpec, Handler]]:
    return {spec.tool_id: (spec, handler) for spec, handler in _CATALOG}


def build_registry(services: list[str] | None = None) -> ToolRegistry:
    registry = ToolRegistry.of([spec for spec, _ in _CATALOG])
    return registry if services is None else registry.restrict(services)


def handler_for(tool_id: str) -> Handler:
    try:
        return service_catalog()[tool_id][1]
    except KeyError as exc:
        raise ToolExecutionError(f"no handler for {tool_id}") from exc
