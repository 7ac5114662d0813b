void function(int n) {
    int x[16];
    for (int i = 0; i < n; i++) {
        x[i] = i;
    }
    for (int j = 0; j < n; j++) {
        x[j] = j;
    }
}
