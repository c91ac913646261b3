from .clause_pool import Added, AuditVerdict, ClausePool, Closed, Duplicate, audit_clause, audit_pool
from .path_pool import Empty, PathPool, UnsatPath

__all__ = [
    'Added', 'AuditVerdict', 'ClausePool', 'Closed', 'Duplicate', 'audit_clause', 'audit_pool',
    'Empty', 'PathPool', 'UnsatPath',
]
