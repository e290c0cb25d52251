"""Static content of the synthetic consulting firm.

Three clients (Henderson Logistics, Meridian Health, Northwind Retail), ten
people, five domains and twelve context files. Nothing here contains a run of
six or more digits, so corpus text can never be mistaken for a one-time code.
"""

from __future__ import annotations

SEED_NOW = "2026-03-16T09:00:00Z"

CLIENTS = ("Henderson", "Meridian", "Northwind")

USERS = [
    {"name": "alice", "role": "sales-rep", "domain": "sales", "assigned": ["henderson"]},
    {"name": "bob", "role": "sales-rep", "domain": "sales", "assigned": ["meridian"]},
    {"name": "carol", "role": "sales-manager", "domain": "sales", "assigned": []},
    {"name": "dave", "role": "delivery-lead", "domain": "delivery", "assigned": []},
    {"name": "erin", "role": "consultant", "domain": "delivery", "assigned": ["henderson"]},
    {"name": "frank", "role": "consultant", "domain": "delivery", "assigned": ["meridian"]},
    {"name": "grace", "role": "hr-manager", "domain": "hr", "assigned": []},
    {"name": "heidi", "role": "finance-manager", "domain": "finance", "assigned": []},
    {"name": "ivan", "role": "account-manager", "domain": "clients", "assigned": []},
    {"name": "judy", "role": "finance-analyst", "domain": "finance", "assigned": []},
]

# domain -> (source name, source type, directory under data/)
SOURCES = {
    "clients": ("client-records", "git-repo", "data/clients"),
    "sales": ("sales-docs", "file-system", "data/sales"),
    "delivery": ("delivery-docs", "file-system", "data/delivery"),
    "hr": ("hr-records", "file-system", "data/hr"),
    "finance": ("finance-ledger", "file-system", "data/finance"),
}


def uid(domain: str, path: str) -> str:
    return f"{domain}/{SOURCES[domain][0]}/{path}"


# domain -> path -> (metadata, content)
FILES: dict[str, dict[str, tuple[dict, str]]] = {
    "clients": {
        "henderson/profile.md": (
            {"author": "ivan", "timestamp": "2026-03-09T10:15:00Z", "sensitivity": "confidential",
             "authority": 0.9, "entities": ["Henderson"], "unit_type": "unstructured"},
            """# Henderson Logistics: client profile

Henderson Logistics is a regional freight and warehousing operator with
fourteen distribution centres in the Midwest. The relationship started in
2021 with a network optimisation study and has grown into our largest
account by revenue.

Key contact: Maria Lopez, Chief Operating Officer, who acts as executive
sponsor for every engagement. Day-to-day contact is Sam Okafor, Director of
Supply Chain Systems.

Account owner: Ivan. Delivery lead on the current engagement: Dave.

Commercial terms: master services agreement renewed in January 2026,
payment terms net 30, invoices in USD, purchase orders required above
25,000 dollars.

Relationship health: satisfaction is high after the phase one analytics
rollout, but the COO has flagged budget pressure for the second half of the
year. Henderson wants a clear business case before signing the phase two
expansion.
""",
        ),
        "northwind/profile.md": (
            {"author": "ivan", "timestamp": "2025-11-20T14:00:00Z", "sensitivity": "confidential",
             "authority": 0.7, "entities": ["Northwind"], "unit_type": "unstructured"},
            """# Northwind Retail: client profile

Northwind Retail runs a chain of home and garden stores across the Pacific
Northwest. We delivered a pricing analytics pilot for their merchandising
team in 2025.

Key contact: Priya Natarajan, VP Merchandising, executive sponsor for the
pilot.

Account owner: Ivan.

Status: the pilot ended in November 2025. Northwind is evaluating a
follow-on loyalty analytics programme and asked for a proposal in the new
year. Payment terms net 45.

Risk notes: their procurement team is consolidating vendors and a
competitor has been invited to pitch.
""",
        ),
        "northwind/contacts.md": (
            {"author": "ivan", "timestamp": "2025-10-02T08:30:00Z", "sensitivity": "confidential",
             "authority": 0.6, "entities": ["Northwind"], "unit_type": "structured"},
            """# Northwind Retail: contacts

| Name | Title | Email | Notes |
|------|-------|-------|-------|
| Priya Natarajan | VP Merchandising | priya.natarajan@northwind.example | executive sponsor |
| Tom Becker | Procurement Director | tom.becker@northwind.example | signs all statements of work |
| Lena Fischer | Analytics Manager | lena.fischer@northwind.example | day-to-day pilot contact |

Preferred channel for contract questions: Tom Becker by email, copy Priya.
Quarterly business reviews are held on the first Tuesday of the quarter.
""",
        ),
    },
    "sales": {
        "clients/henderson/deal.md": (
            {"author": "alice", "timestamp": "2026-03-12T16:40:00Z", "sensitivity": "confidential",
             "authority": 0.8, "entities": ["Henderson"], "unit_type": "unstructured"},
            """# Henderson phase two expansion: deal notes

Stage: negotiation. Owner: Alice. Sponsor on the client side: Maria Lopez.

Scope proposed: extend the analytics platform from three pilot
distribution centres to all fourteen, add a demand forecasting workstream
and a twelve month managed service.

Proposed contract value: 480,000 dollars over twelve months, priced from
the standard rate card with a 5 percent volume discount. Henderson asked
for a further discount tied to milestone payments.

Next steps: send the revised proposal after the delivery team confirms the
phase one project status, then book a closing call with the COO. Target
close date is the end of April.

Competitive situation: no competitor shortlisted; main risk is budget
timing on the client side.
""",
        ),
        "pipeline/q3-forecast.md": (
            {"author": "carol", "timestamp": "2026-03-13T11:00:00Z", "sensitivity": "internal",
             "authority": 0.85, "entities": ["Henderson", "Meridian", "Northwind"], "unit_type": "structured"},
            """# Q3 pipeline forecast

| Opportunity | Client | Stage | Value (USD) | Probability | Expected close |
|-------------|--------|-------|-------------|-------------|----------------|
| Phase two expansion | Henderson | Negotiation | 480,000 | 70% | April |
| Platform renewal | Meridian | Proposal | 210,000 | 60% | June |
| Loyalty analytics | Northwind | Prospect | 150,000 | 20% | August |

Weighted pipeline: 492,000 dollars against a quarterly quota of 450,000.

Commentary: the forecast depends on the Henderson expansion closing on
time. Meridian renewal timing is linked to their implementation go-live.
Northwind is at risk of churn and should not be counted in the commit.
""",
        ),
        "pricing/rate-card.md": (
            {"author": "carol", "timestamp": "2025-12-01T09:00:00Z", "sensitivity": "confidential",
             "authority": 0.95, "entities": [], "unit_type": "structured"},
            """# Rate card 2025 (confidential)

Daily rates, USD, before discounts:

| Level | Daily rate |
|-------|------------|
| Partner | 2,400 |
| Principal | 1,900 |
| Senior consultant | 1,450 |
| Consultant | 1,100 |
| Analyst | 800 |

Discount rules: up to 5 percent volume discount for engagements above
250,000 dollars with sales manager sign-off; anything above 5 percent needs
partner approval. Pricing commitments to clients must never be made by
email without approval.
""",
        ),
    },
    "delivery": {
        "projects/henderson/status.md": (
            {"author": "dave", "timestamp": "2026-03-10T09:00:00Z", "sensitivity": "internal",
             "authority": 0.8, "entities": ["Henderson"], "unit_type": "unstructured"},
            """# Henderson analytics rollout: project status

Overall status: on track.

Milestones: data pipeline for the three pilot distribution centres is live;
dashboard handover to the client operations team completed on schedule.
Next milestone is the forecasting model review in early April.

Staffing: Dave (delivery lead), Erin (senior consultant), one analyst.
Utilization is at plan.

Risks and blockers: none open. Client data quality has improved since the
February sprint.
""",
        ),
        "projects/meridian/status.md": (
            {"author": "frank", "timestamp": "2026-03-11T15:20:00Z", "sensitivity": "internal",
             "authority": 0.8, "entities": ["Meridian"], "unit_type": "unstructured"},
            """# Meridian Health implementation: project status

Overall status: amber.

Scope: patient scheduling optimisation across four hospitals. Go-live for
the first hospital is planned for May; the remaining three follow in
monthly waves.

Staffing: Frank (consultant) and two contractors. Dave reviews the
workstream weekly.

Blockers: integration with the Meridian electronic health record system is
two weeks behind because of a vendor upgrade. Mitigation agreed with the
client IT lead; timeline buffer reduced to one week.
""",
        ),
    },
    "hr": {
        "compensation/salary-bands.md": (
            {"author": "grace", "timestamp": "2026-01-15T10:00:00Z", "sensitivity": "confidential",
             "authority": 0.95, "entities": [], "unit_type": "structured"},
            """# Salary bands 2026 (confidential)

Annual base salary, USD:

| Band | Minimum | Midpoint | Maximum | Bonus target |
|------|---------|----------|---------|--------------|
| Analyst | 72,000 | 80,000 | 88,000 | 5% |
| Consultant | 90,000 | 100,000 | 112,000 | 8% |
| Senior consultant | 115,000 | 128,000 | 140,000 | 10% |
| Principal | 145,000 | 162,000 | 180,000 | 15% |
| Partner | 190,000 | 215,000 | 240,000 | 25% |

Promotion increases are capped at 12 percent. Compensation changes outside
the band require HR and partner approval.
""",
        ),
        "policies/leave-policy.md": (
            {"author": "grace", "timestamp": "2025-09-01T09:00:00Z", "sensitivity": "internal",
             "authority": 0.9, "entities": [], "unit_type": "unstructured"},
            """# Leave policy

Vacation: every employee receives 25 days of paid vacation per year plus
public holidays. Up to 5 unused days may be carried over to the next year
and must be used by the end of March.

Sick leave: paid sick leave of up to 10 days per year without a doctor's
note; longer absences need a note and are handled case by case by HR.

Parental leave: 16 weeks fully paid for the primary caregiver and 6 weeks
for the secondary caregiver, available within the first year.

Requests go through the HR portal and need manager approval at least two
weeks ahead for vacations longer than five days.
""",
        ),
    },
    "finance": {
        "invoices/receivables.md": (
            {"author": "judy", "timestamp": "2026-03-14T17:00:00Z", "sensitivity": "confidential",
             "authority": 0.9, "entities": ["Henderson", "Meridian", "Northwind"], "unit_type": "structured"},
            """# Accounts receivable (as of mid March 2026)

| Invoice | Client | Amount (USD) | Issued | Due | Status |
|---------|--------|--------------|--------|-----|--------|
| INV-2026-014 | Henderson | 62,500 | 2026-02-01 | 2026-03-03 | paid |
| INV-2026-021 | Henderson | 62,500 | 2026-03-01 | 2026-03-31 | outstanding |
| INV-2026-018 | Meridian | 48,000 | 2026-02-10 | 2026-03-12 | overdue |
| INV-2025-097 | Northwind | 18,400 | 2025-11-30 | 2026-01-14 | overdue, in collection |

Total outstanding: 128,900 dollars, of which 66,400 is overdue.
Finance will chase Meridian this week; the Northwind balance may need a
write-off if the relationship does not continue.
""",
        ),
        "budget/fy2026.md": (
            {"author": "heidi", "timestamp": "2026-01-05T12:00:00Z", "sensitivity": "confidential",
             "authority": 0.9, "entities": [], "unit_type": "structured"},
            """# FY2026 budget summary

Planned revenue: 4.2 million dollars. Target operating margin: 18 percent.

Cost allocation:
- Delivery staffing and contractors: 2.3 million
- Sales and marketing: 0.45 million
- Travel: 0.18 million
- Tools and software licenses: 0.12 million
- Office and facilities: 0.21 million

Spend above 10,000 dollars needs finance manager approval. Quarterly
budget reviews compare actual costs against plan; the first review is in
April.
""",
        ),
    },
}


# Upstream changes used by the freshness-governance scenarios.
V2_UPDATES = [
    {
        "domain": "sales",
        "path": "pricing/rate-card.md",
        "timestamp": "2026-03-15T08:00:00Z",
        "author": "carol",
        "content": """# Rate card 2026 (confidential)

Daily rates, USD, before discounts, effective March 2026:

| Level | Daily rate |
|-------|------------|
| Partner | 2,600 |
| Principal | 2,050 |
| Senior consultant | 1,550 |
| Consultant | 1,200 |
| Analyst | 850 |

Discount rules: up to 5 percent volume discount for engagements above
250,000 dollars with sales manager sign-off; anything above 5 percent needs
partner approval. Pricing commitments to clients must never be made by
email without approval.
""",
    },
    {
        "domain": "delivery",
        "path": "projects/henderson/status.md",
        "timestamp": "2026-03-15T16:00:00Z",
        "author": "erin",
        "content": """# Henderson analytics rollout: project status

Overall status: at risk.

Milestones: the forecasting model review slipped because the client paused
data access during a warehouse system migration. Handover of the demand
forecasting workstream is now expected in late April.

Staffing: Dave (delivery lead), Erin (senior consultant), one analyst.
Utilization is below plan while the team waits for data.

Risks and blockers: client data freeze until the migration completes;
escalated to the COO. Phase two expansion timing may be affected.
""",
    },
]

V2_DELETIONS = [
    {"domain": "clients", "path": "northwind/profile.md", "reason": "client churned"},
    {"domain": "clients", "path": "northwind/contacts.md", "reason": "relationship terminated"},
]

V2_QUERIES = [
    {"name": "outdated_pricing", "user": "carol", "text": "What are the current daily rates on the rate card?",
     "target": uid("sales", "pricing/rate-card.md")},
    {"name": "churned_client", "user": "ivan", "text": "What is the latest on the Northwind account?",
     "target": uid("clients", "northwind/profile.md")},
    {"name": "contradictory_status", "user": "dave", "text": "Is the Henderson project on track or at risk?",
     "target": uid("delivery", "projects/henderson/status.md")},
    {"name": "terminated_contact", "user": "ivan", "text": "Who is our key contact at Northwind for contracts?",
     "target": uid("clients", "northwind/contacts.md")},
]
