"""Semantic vocabulary of an event graph: node labels, relationship types, property keys."""

EVENT = "Event"
ENTITY = "Entity"
LOG = "Log"
CLASS = "Class"

E_EN = "E_EN"
L_E = "L_E"
DF = "DF"
E_C = "E_C"
DF_C = "DF_C"

NODE_LABELS = frozenset({EVENT, ENTITY, LOG, CLASS})
REL_TYPES = frozenset({E_EN, L_E, DF, E_C, DF_C})

# endpoint labels required by each relationship type
ENDPOINTS = {
    E_EN: (EVENT, ENTITY),
    L_E: (LOG, EVENT),
    DF: (EVENT, EVENT),
    E_C: (EVENT, CLASS),
    DF_C: (CLASS, CLASS),
}

ACTIVITY = "Activity"
TIMESTAMP = "timestamp"
LOG_ID = "LogID"
ID = "ID"
UID = "uID"
ENTITY_TYPE = "EntityType"
# DF edges also name the entity whose chain produced them
ENTITY_UID = "EntityUID"
TYPE = "Type"
COUNT = "count"
