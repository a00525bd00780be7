/**
 * Wire types for the fragment review API.
 *
 * Every interface mirrors the server payload field for field; the client
 * never fabricates or renames fields, so a refetch can always replace
 * local state wholesale.
 */
export const STATUSES = ['pending', 'approved', 'edited', 'rejected'];
