"""Published reference values used by ``reproduce --diff``.

These are data, not computed ground truth: decimal strings exactly as printed,
so the number of printed digits is part of the reference.
"""
from typing import Dict, NamedTuple, Tuple

from app.services.problem import Preset


class ConvergenceRow(NamedTuple):
    D: int
    re: str
    im: str


class CouplingRow(NamedTuple):
    g: str
    re: str
    im: str
    ratio: str


# Hankel sequence E^[D,0] of the triple well at g = 0.14
CONVERGENCE_G = "0.14"
CONVERGENCE_TABLE: Tuple[ConvergenceRow, ...] = (
    ConvergenceRow(2, "0.96913474062929793208", "0"),
    ConvergenceRow(3, "0.96912933030952144688", "0"),
    ConvergenceRow(4, "0.96912932029284635448", "0"),
    ConvergenceRow(5, "0.96912932006642961226", "3.6781221743857153252e-10"),
    ConvergenceRow(6, "0.96912932002647227146", "3.3990326234127550889e-10"),
    ConvergenceRow(7, "0.96912932002710973379", "3.3801038698293392418e-10"),
    ConvergenceRow(8, "0.96912932002717289039", "3.3798079586780234680e-10"),
    ConvergenceRow(9, "0.96912932002717518442", "3.3798093143407212241e-10"),
    ConvergenceRow(10, "0.96912932002717525409", "3.3798095397280767486e-10"),
    ConvergenceRow(11, "0.96912932002717525622", "3.3798095479442123313e-10"),
    ConvergenceRow(12, "0.96912932002717525629", "3.3798095481219295624e-10"),
    ConvergenceRow(13, "0.96912932002717525629", "3.3798095481219029216e-10"),
    ConvergenceRow(14, "0.96912932002717525629", "3.3798095481216587093e-10"),
    ConvergenceRow(15, "0.96912932002717525629", "3.3798095481216435223e-10"),
)

TRIPLE_WELL_TABLE: Tuple[CouplingRow, ...] = (
    CouplingRow("0.08", "0.99025645954150600314", "1.16994e-32", "0.6362094894"),
    CouplingRow("0.09", "0.98761765110834730415", "1.28623698e-25", "0.6700502315"),
    CouplingRow("0.10", "0.98464158830285882643", "1.3513930260e-20", "0.7006574893"),
    CouplingRow("0.12", "0.97763491479323529157", "4.3530125379031e-14", "0.7530467190"),
    CouplingRow("0.14", "0.96912932002717525629", "3.37980954812164e-10", "0.7944913345"),
    CouplingRow("0.16", "0.95896997046169207832", "1.0619001732959989e-7", "0.8253492417"),
    CouplingRow("0.18", "0.94691604067745932355", "5.18077667159013113e-6", "0.8453084682"),
    CouplingRow("0.20", "0.93255571582477452180", "7.94775543996767651e-5", "0.8530716514"),
    CouplingRow("0.22", "0.91525354748034208273", "5.70253065914296141e-4", "0.8461088416"),
    CouplingRow("0.24", "0.89442055320991452496", "2.424632840047890532e-3", "0.8222158493"),
    CouplingRow("0.26", "0.87011531157430539225", "7.104058338260953225e-3", "0.7828715436"),
    CouplingRow("0.28", "0.84333442392342060412", "1.5915859465250206010e-2", "0.7343132667"),
    CouplingRow("0.30", "0.81560795814733914293", "2.9400216892153485663e-2", "0.6844475376"),
)

DOUBLE_WELL_TABLE: Tuple[CouplingRow, ...] = (
    CouplingRow("0.08", "0.99017315154568105030", "4.66667951e-22", "1.554541174"),
    CouplingRow("0.09", "0.98748105548308533216", "2.3014736620e-17", "1.543296673"),
    CouplingRow("0.10", "0.98442766976525540084", "5.1093948883947e-14", "1.530566484"),
    CouplingRow("0.12", "0.97716020191841551216", "1.1063680213861671e-9", "1.500354438"),
    CouplingRow("0.14", "0.96816424784205963513", "4.297124100601175228e-7", "1.463074727"),
    CouplingRow("0.16", "0.95708500653988706061", "1.9606870293524100682e-5", "1.417112487"),
    CouplingRow("0.18", "0.94328218799381038166", "2.5699864836055797687e-4", "1.35910675"),
    CouplingRow("0.20", "0.92594246107314318252", "1.5440221243204925966e-3", "1.284707315"),
    CouplingRow("0.22", "0.90482508551985951067", "5.5395017058573660278e-3", "1.193719284"),
    CouplingRow("0.24", "0.88093011197386366807", "1.3978475279423154843e-2", "1.093828654"),
    CouplingRow("0.26", "0.85613353763295142744", "2.767004146177769213e-2", "0.9964939951"),
    CouplingRow("0.28", "0.83225989985769363726", "4.6300611971065823176e-2", "0.9104055713"),
    CouplingRow("0.30", "0.81052712217939364397", "6.8908503646837670242e-2", "0.839251556"),
)

COUPLING_TABLES: Dict[int, Tuple[Preset, Tuple[CouplingRow, ...]]] = {
    2: (Preset.TRIPLE_WELL, TRIPLE_WELL_TABLE),
    3: (Preset.DOUBLE_WELL, DOUBLE_WELL_TABLE),
}

TABLE_IDS = (1, 2, 3)


def significant_digits(text: str) -> int:
    """Printed significant digits of a decimal string ('1.16994e-32' -> 6)"""
    mantissa = text.lower().split("e")[0].lstrip("+-").replace(".", "")
    stripped = mantissa.lstrip("0")
    return len(stripped) if stripped else 1
