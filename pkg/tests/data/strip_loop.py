def test_rstrip(s):
    result = s.rstrip()
    for char in result:
        if char.isalpha():
            result = result.lstrip(char)
        elif char.isdigit():
            result = result.strip(char)
        else:
            result = result.rstrip(char)
    return result
assert test_rstrip("  hello world  ") == "  hello world"
