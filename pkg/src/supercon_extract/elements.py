"""Periodic-table symbols and English element names."""

_TABLE = """
H hydrogen|He helium|Li lithium|Be beryllium|B boron|C carbon|N nitrogen|O oxygen|F fluorine|Ne neon
Na sodium|Mg magnesium|Al aluminium|Si silicon|P phosphorus|S sulfur|Cl chlorine|Ar argon|K potassium|Ca calcium
Sc scandium|Ti titanium|V vanadium|Cr chromium|Mn manganese|Fe iron|Co cobalt|Ni nickel|Cu copper|Zn zinc
Ga gallium|Ge germanium|As arsenic|Se selenium|Br bromine|Kr krypton|Rb rubidium|Sr strontium|Y yttrium|Zr zirconium
Nb niobium|Mo molybdenum|Tc technetium|Ru ruthenium|Rh rhodium|Pd palladium|Ag silver|Cd cadmium|In indium|Sn tin
Sb antimony|Te tellurium|I iodine|Xe xenon|Cs caesium|Ba barium|La lanthanum|Ce cerium|Pr praseodymium|Nd neodymium
Pm promethium|Sm samarium|Eu europium|Gd gadolinium|Tb terbium|Dy dysprosium|Ho holmium|Er erbium|Tm thulium|Yb ytterbium
Lu lutetium|Hf hafnium|Ta tantalum|W tungsten|Re rhenium|Os osmium|Ir iridium|Pt platinum|Au gold|Hg mercury
Tl thallium|Pb lead|Bi bismuth|Po polonium|At astatine|Rn radon|Fr francium|Ra radium|Ac actinium|Th thorium
Pa protactinium|U uranium|Np neptunium|Pu plutonium|Am americium|Cm curium|Bk berkelium|Cf californium|Es einsteinium|Fm fermium
Md mendelevium|No nobelium|Lr lawrencium|Rf rutherfordium|Db dubnium|Sg seaborgium|Bh bohrium|Hs hassium|Mt meitnerium|Ds darmstadtium
Rg roentgenium|Cn copernicium|Nh nihonium|Fl flerovium|Mc moscovium|Lv livermorium|Ts tennessine|Og oganesson
"""

ELEMENT_NAMES = {}
for _line in _TABLE.strip().splitlines():
    for _item in _line.split("|"):
        _symbol, _name = _item.split()
        ELEMENT_NAMES[_symbol] = _name

ELEMENTS = frozenset(ELEMENT_NAMES)

# Symbol groups usable as @name in taxonomy rule files.
GROUPS = {
    "alkali": frozenset("Li Na K Rb Cs Fr".split()),
    "alkaline_earth": frozenset("Be Mg Ca Sr Ba Ra".split()),
    "rare_earth": frozenset("Sc Y La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu".split()),
    "actinide": frozenset("Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr".split()),
    "transition": frozenset(
        "Sc Ti V Cr Mn Fe Co Ni Cu Zn Y Zr Nb Mo Tc Ru Rh Pd Ag Cd "
        "Hf Ta W Re Os Ir Pt Au Hg".split()
    ),
    "post_transition": frozenset("Al Ga In Sn Tl Pb Bi Po".split()),
    "metalloid": frozenset("B Si Ge As Sb Te".split()),
    "chalcogen": frozenset("S Se Te".split()),
    "pnictogen": frozenset("N P As Sb Bi".split()),
    "halogen": frozenset("F Cl Br I At".split()),
}
GROUPS["metal"] = (
    GROUPS["alkali"]
    | GROUPS["alkaline_earth"]
    | GROUPS["rare_earth"]
    | GROUPS["actinide"]
    | GROUPS["transition"]
    | GROUPS["post_transition"]
)


def is_element(symbol):
    return symbol in ELEMENTS
